"""Builds the optional compiled kernels; everything else is in pyproject.toml."""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SKEWSERIES_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("skewseries._kernels", ["src/skewseries/_kernels.pyx"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # no Cython: the pure-Python kernels are used at import time
        ext_modules = []

setup(ext_modules=ext_modules)
