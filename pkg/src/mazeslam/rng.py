"""Deterministic random streams.

Every consumer of randomness gets its own counter-based Philox stream
derived from the single master seed and a fixed stream name, so adding or
reordering consumers never perturbs the draws of the others. That is what
makes whole-run byte-identical replay possible.
"""

from __future__ import annotations

import numpy as np

# Fixed registry: renumbering breaks replay of existing logs.
_STREAMS = {
    "lidar": 0,
    "imu": 1,
    "odom": 2,
    "slam_motion": 3,
    "slam_resample": 4,
    "mcl_init": 5,
    "mcl_motion": 6,
    "mcl_resample": 7,
    "misc": 8,
}


def stream(seed: int, name: str, index: int | None = None) -> np.random.Generator:
    """Return the named Philox stream for ``seed``.

    ``index`` selects a sub-stream (e.g. one per particle slot).
    """
    if name not in _STREAMS:
        raise KeyError(f"unknown rng stream {name!r}")
    key = (_STREAMS[name],) if index is None else (_STREAMS[name], index)
    ss = np.random.SeedSequence(seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
