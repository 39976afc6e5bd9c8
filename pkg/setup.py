"""Build script for the optional compiled LCS kernel.

The extension is marked optional: if no C toolchain (or Cython) is available
the install still succeeds and the package falls back to the pure-Python
kernel at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "sumattack._kernels._lcs",
                ["src/sumattack/_kernels/_lcs.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
