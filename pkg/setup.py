"""Build script for the optional compiled pooling kernels.

The package is fully functional without the extension: trajlift.kernels
falls back to a pure-numpy implementation when the compiled module is
missing, so a plain source install still works on hosts without a C
toolchain.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "trajlift.kernels._poolcore",
                ["src/trajlift/kernels/_poolcore.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
