"""Pick the compiled kernels when available, the pure-Python ones otherwise.

Set ``MEMEXT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from memext import _kernels_py

if os.environ.get("MEMEXT_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from memext import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

heatmap_max = _impl.heatmap_max
matching_blocks = _impl.matching_blocks
