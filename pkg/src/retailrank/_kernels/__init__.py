"""Hot spatial kernels.

The compiled Cython module is used when it was built; otherwise the numpy
fallback is loaded. Set ``RETAILRANK_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels as python

BACKEND = "python"
compiled = None

if not os.environ.get("RETAILRANK_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None
    else:
        BACKEND = "cython"

_impl = compiled if compiled is not None else python

EARTH_RADIUS_M = python.EARTH_RADIUS_M
haversine_many = _impl.haversine_many
neighbor_category_counts = _impl.neighbor_category_counts

__all__ = [
    "BACKEND",
    "EARTH_RADIUS_M",
    "haversine_many",
    "neighbor_category_counts",
    "compiled",
    "python",
]
