"""Kernel backend selection.

The compiled Cython module is used when it imports; otherwise the numpy
fallback is used.  Setting ``HICLUST_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _fallback

fallback = _fallback

try:
    if os.environ.get("HICLUST_PURE_PYTHON") == "1":
        raise ImportError("pure python backend requested")
    from . import _kernels as compiled
except ImportError:
    compiled = None

kernels = compiled if compiled is not None else fallback
BACKEND = "cython" if compiled is not None else "python"

__all__ = ["BACKEND", "compiled", "fallback", "kernels"]
