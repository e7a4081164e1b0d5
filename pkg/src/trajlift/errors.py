"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems (ValueError
subclasses) exit 2, file-format and OS errors exit 3, numeric failures
exit 4.
"""


class DimensionError(ValueError):
    """Array shapes are inconsistent with each other or with a config."""


class ParameterError(ValueError):
    """A scalar argument is outside its valid range."""


class FormatError(ValueError):
    """A data file is malformed. Carries the offending path and line."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class NumericError(ArithmeticError):
    """A computation produced non-finite values or failed to converge."""
