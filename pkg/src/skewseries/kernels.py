"""Kernel selection: the compiled extension when it imports, else pure Python.

Set SKEWSERIES_PURE=1 to force the fallback.
"""
import os

BACKEND = "python"
if not os.environ.get("SKEWSERIES_PURE"):
    try:
        from ._kernels import add_shifted, conv_trunc, inv_trunc  # noqa: F401
        BACKEND = "cython"
    except ImportError:
        pass
if BACKEND == "python":
    from ._kernels_py import add_shifted, conv_trunc, inv_trunc  # noqa: F401
