"""Hot kernels with a compiled core and a pure-Python fallback.

The compiled extension is used when it imports; setting ``NISQMAP_PURE=1``
forces the fallback.  ``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels as py

if os.environ.get("NISQMAP_PURE", "") not in ("", "0"):
    _impl, BACKEND = py, "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl, BACKEND = py, "python"

bfs_all_pairs = _impl.bfs_all_pairs
min_placement_cost = _impl.min_placement_cost
h_costs = _impl.h_costs


def compiled():
    """The compiled module, or None when it is unavailable."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


__all__ = ["BACKEND", "bfs_all_pairs", "min_placement_cost", "h_costs", "compiled", "py"]
