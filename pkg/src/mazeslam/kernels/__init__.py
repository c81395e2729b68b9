"""Hot numeric kernels with selectable backend.

The numba backend JIT-compiles tight per-beam loops; the numpy backend is
a vectorized pure-numpy fallback with identical contracts. Selection:

  MAZESLAM_NUMBA=0  -> force the numpy backend
  (default)         -> numba if it imports, else numpy

``benchmarks/bench_kernels.py`` times the two against each other.
"""

from __future__ import annotations

import os
import warnings

_want_numba = os.environ.get("MAZESLAM_NUMBA", "1").lower() not in ("0", "false", "no")

if _want_numba:
    try:
        from mazeslam.kernels import numba_impl as _impl

        BACKEND = "numba"
    except ImportError as exc:  # pragma: no cover - depends on environment
        warnings.warn(f"numba unavailable ({exc}); falling back to numpy kernels")
        from mazeslam.kernels import numpy_impl as _impl

        BACKEND = "numpy"
else:
    from mazeslam.kernels import numpy_impl as _impl

    BACKEND = "numpy"

raycast_segments = _impl.raycast_segments
min_dist_segments = _impl.min_dist_segments
trace_and_add = _impl.trace_and_add
raycast_grid_cells = _impl.raycast_grid_cells
score_endpoints = _impl.score_endpoints
score_endpoints_known = _impl.score_endpoints_known
score_endpoints_known_batch = _impl.score_endpoints_known_batch
score_endpoints_bilinear = _impl.score_endpoints_bilinear
mcl_log_weights = _impl.mcl_log_weights

__all__ = [
    "BACKEND",
    "raycast_segments",
    "min_dist_segments",
    "trace_and_add",
    "raycast_grid_cells",
    "score_endpoints",
    "score_endpoints_known",
    "score_endpoints_known_batch",
    "score_endpoints_bilinear",
    "mcl_log_weights",
]
