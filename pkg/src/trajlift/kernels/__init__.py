"""Temporal pooling kernels with a compiled fast path.

The Cython extension is used when it was built; otherwise the pure-numpy
implementation takes over. ``TRAJLIFT_KERNELS`` forces a backend:

* ``auto`` (default) — compiled if available, else numpy,
* ``c``  — compiled, ImportError if the extension is missing,
* ``py`` — always the numpy fallback.

Both backends implement the same contract and agree to floating-point
round-off; ``benchmarks/bench_kernels.py`` compares their speed.
"""
import os

import numpy as np

from . import _pool_py
from ._pool_py import check_window

_choice = os.environ.get("TRAJLIFT_KERNELS", "auto").lower()
if _choice not in ("auto", "c", "py"):
    raise ValueError(f"TRAJLIFT_KERNELS must be auto, c, or py, not {_choice!r}")

_core = None
if _choice in ("auto", "c"):
    try:
        from . import _poolcore as _core
    except ImportError:
        if _choice == "c":
            raise
        _core = None

_BACKEND = "numpy" if _core is None else "compiled"


def active_backend() -> str:
    """Which implementation is live: 'compiled' or 'numpy'."""
    return _BACKEND


def avg_pool_forward(rows: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average over each (n, F) row, replicate padding."""
    if _core is None:
        return _pool_py.avg_pool_forward(rows, window)
    rows = np.ascontiguousarray(rows, dtype=float)
    check_window(window, rows.shape[1])
    return _core.avg_pool_forward(rows, window)


def avg_pool_backward(grad: np.ndarray, window: int) -> np.ndarray:
    """Adjoint of :func:`avg_pool_forward`."""
    if _core is None:
        return _pool_py.avg_pool_backward(grad, window)
    grad = np.ascontiguousarray(grad, dtype=float)
    check_window(window, grad.shape[1])
    return _core.avg_pool_backward(grad, window)
