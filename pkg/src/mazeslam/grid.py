"""Log-odds occupancy grids: scan integration, raycasting, likelihood
fields, and ground-truth rasterization.

Cells are stored row-major with row 0 at the grid origin corner (min x,
min y); the origin pose marks the outer corner of cell (0, 0) and must be
axis-aligned (theta = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from mazeslam import kernels
from mazeslam.geometry import Pose2
from mazeslam.kernels import numpy_impl
from mazeslam.sensors import LidarScan
from mazeslam.world import WorldModel

# Inverse sensor model and clamping. p_hit = 0.7, p_miss = 0.4.
L_OCC = math.log(0.7 / 0.3)
L_FREE = math.log(0.4 / 0.6)
L_CLAMP = 8.0

# Trinary classification thresholds (probability space), chosen to match
# the conventional PGM map-file ecosystem.
OCC_THRESH = 0.65
FREE_THRESH = 0.196

# Same thresholds in log-odds space, precomputed for mask building.
L_OCC_THRESH = math.log(OCC_THRESH / (1.0 - OCC_THRESH))
L_FREE_THRESH = math.log(FREE_THRESH / (1.0 - FREE_THRESH))


def logodds_to_prob(l):
    return 1.0 / (1.0 + np.exp(-np.asarray(l, dtype=float)))


def prob_to_logodds(p):
    p = np.asarray(p, dtype=float)
    return np.log(p / (1.0 - p))


@dataclass
class OccupancyGrid:
    resolution: float
    origin: Pose2
    cells: np.ndarray  # (height, width) float64 log-odds

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.origin.theta != 0.0:
            raise ValueError("grid origin must be axis-aligned (theta = 0)")
        self.cells = np.asarray(self.cells, dtype=float)
        if self.cells.ndim != 2:
            raise ValueError("cells must be a 2D array")

    @classmethod
    def empty(cls, width: int, height: int, resolution: float, origin: Pose2 = Pose2()) -> "OccupancyGrid":
        return cls(resolution, origin, np.zeros((height, width)))

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.resolution, self.origin, self.cells.copy())

    def world_to_cell(self, x: float, y: float):
        """Map a world point to (col, row), or None when out of bounds."""
        col = math.floor((x - self.origin.x) / self.resolution)
        row = math.floor((y - self.origin.y) / self.resolution)
        if 0 <= col < self.width and 0 <= row < self.height:
            return col, row
        return None

    def cell_center(self, col: int, row: int) -> tuple[float, float]:
        return (
            self.origin.x + (col + 0.5) * self.resolution,
            self.origin.y + (row + 0.5) * self.resolution,
        )

    def prob(self) -> np.ndarray:
        return logodds_to_prob(self.cells)

    def occ_mask(self, threshold: float = OCC_THRESH) -> np.ndarray:
        return self.cells > prob_to_logodds(threshold)

    def free_mask(self, threshold: float = FREE_THRESH) -> np.ndarray:
        return self.cells < prob_to_logodds(threshold)

    def trinary(self) -> np.ndarray:
        """Per-cell class: 1 occupied, 0 free, -1 unknown."""
        out = np.full(self.cells.shape, -1, dtype=np.int8)
        out[self.occ_mask()] = 1
        out[self.free_mask()] = 0
        return out


def integrate_scan(grid: OccupancyGrid, pose: Pose2, scan: LidarScan, max_range: float) -> None:
    """Fuse one scan into the grid (in place) with the inverse sensor model.

    Cells crossed between the sensor and each beam end collect free
    evidence, hit endpoints collect occupied evidence, and the result is
    clamped to [-L_CLAMP, L_CLAMP]. The sensor's own cell is left alone.
    """
    if grid.world_to_cell(pose.x, pose.y) is None:
        raise ValueError("sensor pose lies outside the grid")
    if scan.n_beams == 0:
        return
    hits = scan.returns_mask(max_range)
    r = np.where(hits, scan.ranges, max_range)
    world_angles = pose.theta + scan.angles
    exs = pose.x + r * np.cos(world_angles)
    eys = pose.y + r * np.sin(world_angles)
    kernels.trace_and_add(
        grid.cells,
        grid.origin.x,
        grid.origin.y,
        grid.resolution,
        pose.x,
        pose.y,
        exs,
        eys,
        hits.astype(np.uint8),
        L_FREE,
        L_OCC,
    )
    np.clip(grid.cells, -L_CLAMP, L_CLAMP, out=grid.cells)


def raycast_grid(
    grid: OccupancyGrid,
    origin: tuple[float, float],
    angle: float,
    max_range: float,
    occ_threshold: float = OCC_THRESH,
    mask: np.ndarray | None = None,
):
    """Distance to the first occupied cell along a ray, or None if no hit.

    ``mask`` lets callers reuse a precomputed occupancy mask.
    """
    ox, oy = float(origin[0]), float(origin[1])
    if grid.world_to_cell(ox, oy) is None:
        raise ValueError("ray origin lies outside the grid")
    if mask is None:
        mask = grid.occ_mask(occ_threshold)
    d = kernels.raycast_grid_cells(
        np.ascontiguousarray(mask, dtype=np.uint8),
        grid.origin.x,
        grid.origin.y,
        grid.resolution,
        ox,
        oy,
        float(angle),
        float(max_range),
    )
    return None if d < 0 else float(d)


@dataclass
class LikelihoodField:
    """Per-cell distance to the nearest occupied cell center, capped."""

    resolution: float
    origin: Pose2
    distances: np.ndarray
    d_max: float
    has_occupied: bool = True


def likelihood_field_from_mask(
    occ: np.ndarray, resolution: float, origin: Pose2, d_max: float
) -> LikelihoodField:
    any_occ = bool(occ.any())
    if not any_occ:
        dist = np.full(occ.shape, float(d_max))
    else:
        dist = distance_transform_edt(~occ, sampling=resolution)
        np.minimum(dist, d_max, out=dist)
    return LikelihoodField(resolution, origin, dist, float(d_max), any_occ)


def build_likelihood_field(grid: OccupancyGrid, d_max: float = 1.0) -> LikelihoodField:
    return likelihood_field_from_mask(grid.occ_mask(), grid.resolution, grid.origin, d_max)


def rasterize_world(world: WorldModel, resolution: float) -> OccupancyGrid:
    """Ground-truth raster: wall cells fully occupied, the rest fully free.

    A cell counts as a wall cell when a segment passes through its
    half-open square, i.e. the exact set of cells a ray tracing the
    segment visits.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    xmin, ymin, xmax, ymax = world.bounds
    width = math.ceil((xmax - xmin) / resolution)
    height = math.ceil((ymax - ymin) / resolution)
    origin = Pose2(xmin, ymin, 0.0)
    cells = np.full((height, width), -L_CLAMP)
    for x1, y1, x2, y2 in world.segments:
        ii, jj, _ = numpy_impl._beam_cells(xmin, ymin, resolution, x1, y1, x2, y2)
        keep = (ii >= 0) & (ii < width) & (jj >= 0) & (jj < height)
        cells[jj[keep], ii[keep]] = L_CLAMP
    return OccupancyGrid(resolution, origin, cells)
