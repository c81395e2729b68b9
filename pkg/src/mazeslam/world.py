"""Segment-based maze worlds and their JSON file format.

A world is a set of wall segments plus an axis-aligned bounding rectangle
and a spawn pose. File schema:

    {"bounds": [xmin, ymin, xmax, ymax],
     "spawn": [x, y, theta],
     "segments": [[x1, y1, x2, y2], ...]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from mazeslam.errors import InputFileError
from mazeslam.geometry import Pose2
from mazeslam import kernels


@dataclass
class WorldModel:
    segments: np.ndarray  # (M, 4) rows of x1, y1, x2, y2
    bounds: tuple[float, float, float, float]
    spawn: Pose2

    def __post_init__(self):
        self.segments = np.asarray(self.segments, dtype=float).reshape(-1, 4)
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise InputFileError("world bounds must be a nonempty rectangle")
        lengths = np.hypot(
            self.segments[:, 2] - self.segments[:, 0],
            self.segments[:, 3] - self.segments[:, 1],
        )
        if self.segments.shape[0] and lengths.min() <= 0.0:
            raise InputFileError("world contains a zero-length segment")
        if not (xmin <= self.spawn.x <= xmax and ymin <= self.spawn.y <= ymax):
            raise InputFileError("spawn pose lies outside world bounds")

    def contains(self, x: float, y: float) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin <= x <= xmax and ymin <= y <= ymax

    def clearance(self, x: float, y: float) -> float:
        """Distance from (x, y) to the nearest wall segment."""
        if self.segments.shape[0] == 0:
            return float("inf")
        return kernels.min_dist_segments(float(x), float(y), self.segments)


def load_world(path) -> WorldModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFileError(f"cannot read world file {path}: {exc}") from exc
    try:
        bounds = tuple(float(v) for v in doc["bounds"])
        spawn = doc["spawn"]
        segments = np.asarray(doc["segments"], dtype=float)
        if len(bounds) != 4 or len(spawn) != 3:
            raise ValueError("bounds needs 4 values, spawn needs 3")
        return WorldModel(
            segments=segments,
            bounds=bounds,  # type: ignore[arg-type]
            spawn=Pose2(spawn[0], spawn[1], spawn[2]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFileError(f"malformed world file {path}: {exc}") from exc


def save_world(world: WorldModel, path) -> None:
    doc = {
        "bounds": list(world.bounds),
        "spawn": [world.spawn.x, world.spawn.y, world.spawn.theta],
        "segments": world.segments.tolist(),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def bundled_world_path(name: str = "maze8") -> Path:
    """Path of a world shipped inside the package."""
    return Path(__file__).parent / "data" / f"{name}.json"
