"""Build script. The compiled kernel extension is optional: when Cython (or a C
compiler) is unavailable the package installs anyway and falls back to the
pure-Python kernels at import time."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("CELLALLOC_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("cellalloc._kernels", ["src/cellalloc/_kernels.pyx"])],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
