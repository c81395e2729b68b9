"""Monte Carlo localization against a known occupancy grid.

Particles are propagated with the odometry motion model and weighted by
the likelihood-field measurement model over a deterministic, evenly
strided subsample of the scan's beams. Particle state is kept as plain
arrays; no per-particle maps here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mazeslam import kernels
from mazeslam.geometry import Pose2, check_cov, wrap_angle
from mazeslam.grid import LikelihoodField, OccupancyGrid, build_likelihood_field
from mazeslam.sensors import LidarScan
from mazeslam.slam import decompose_delta


@dataclass(frozen=True)
class MclConfig:
    n_particles: int = 500
    beam_subsample: int = 30
    z_hit: float = 0.95
    z_rand: float = 0.05
    sigma_hit: float = 0.1  # m
    alphas: tuple[float, float, float, float] = (0.1, 0.1, 0.05, 0.05)
    resample_ratio: float = 0.5
    lf_d_max: float = 1.0

    def __post_init__(self):
        if self.n_particles < 10:
            raise ValueError("MCL needs at least 10 particles")
        if abs(self.z_hit + self.z_rand - 1.0) > 1e-9:
            raise ValueError("z_hit + z_rand must equal 1")


@dataclass
class PoseEstimate:
    mean: Pose2
    cov: np.ndarray  # 3x3 over (x, y, theta)
    n_eff: float
    stamp: float


def mcl_init_gaussian(
    mean: Pose2, sigmas: tuple[float, float, float], n: int, rng: np.random.Generator
) -> np.ndarray:
    noise = rng.standard_normal((n, 3)) * np.asarray(sigmas, dtype=float)
    poses = noise + np.array([mean.x, mean.y, mean.theta])
    poses[:, 2] = wrap_angle(poses[:, 2])
    return poses


def mcl_init_uniform_free(grid: OccupancyGrid, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform over the free-classified cells, uniform heading."""
    free_rows, free_cols = np.nonzero(grid.free_mask())
    if free_rows.size == 0:
        raise ValueError("map has no free cells to sample from")
    idx = rng.integers(0, free_rows.size, size=n)
    offsets = rng.uniform(0.0, 1.0, size=(n, 2))
    x = grid.origin.x + (free_cols[idx] + offsets[:, 0]) * grid.resolution
    y = grid.origin.y + (free_rows[idx] + offsets[:, 1]) * grid.resolution
    theta = wrap_angle(rng.uniform(-math.pi, math.pi, size=n))
    return np.column_stack([x, y, theta])


def motion_update(
    poses: np.ndarray,
    odom_delta: Pose2,
    alphas: tuple[float, float, float, float],
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized rot1-trans-rot2 odometry sampling for every particle."""
    rot1, trans, rot2 = decompose_delta(odom_delta)
    a1, a2, a3, a4 = alphas
    n = poses.shape[0]
    noise = rng.standard_normal((n, 3))
    r1 = rot1 + noise[:, 0] * math.sqrt(a1 * rot1**2 + a2 * trans**2)
    tr = trans + noise[:, 1] * math.sqrt(a3 * trans**2 + a4 * (rot1**2 + rot2**2))
    r2 = rot2 + noise[:, 2] * math.sqrt(a1 * rot2**2 + a2 * trans**2)
    heading = poses[:, 2] + r1
    out = np.empty_like(poses)
    out[:, 0] = poses[:, 0] + tr * np.cos(heading)
    out[:, 1] = poses[:, 1] + tr * np.sin(heading)
    out[:, 2] = wrap_angle(heading + r2)
    return out


def subsample_endpoints(scan: LidarScan, max_range: float, n_beams: int) -> tuple[np.ndarray, np.ndarray]:
    """Robot-frame endpoints of an evenly strided subset of hit beams."""
    hit_idx = np.nonzero(scan.returns_mask(max_range))[0]
    if hit_idx.size == 0:
        return np.empty(0), np.empty(0)
    if hit_idx.size > n_beams:
        take = np.unique(np.linspace(0, hit_idx.size - 1, n_beams).round().astype(int))
        hit_idx = hit_idx[take]
    r = scan.ranges[hit_idx]
    a = scan.angles[hit_idx]
    return r * np.cos(a), r * np.sin(a)


def estimate_from(poses: np.ndarray, weights: np.ndarray, stamp: float) -> PoseEstimate:
    """Weighted mean pose with a circular mean heading, plus 3x3 covariance."""
    mx = float(weights @ poses[:, 0])
    my = float(weights @ poses[:, 1])
    mtheta = math.atan2(
        float(weights @ np.sin(poses[:, 2])), float(weights @ np.cos(poses[:, 2]))
    )
    dev = np.column_stack(
        [poses[:, 0] - mx, poses[:, 1] - my, wrap_angle(poses[:, 2] - mtheta)]
    )
    cov = (weights[:, None] * dev).T @ dev
    neff = float(1.0 / np.square(weights).sum())
    return PoseEstimate(Pose2(mx, my, mtheta), check_cov(cov, psd_tol=-1e-6), neff, stamp)


def mcl_update(
    poses: np.ndarray,
    log_weights: np.ndarray,
    odom_delta: Pose2,
    scan: LidarScan,
    grid: OccupancyGrid,
    field: LikelihoodField,
    cfg: MclConfig,
    motion_rng: np.random.Generator,
    resample_rng: np.random.Generator,
    max_range: float,
) -> tuple[np.ndarray, np.ndarray, PoseEstimate, bool]:
    """One MCL step: motion, weighting, validity, resampling, estimate.

    Returns (poses, log_weights, estimate, reset_flag); reset_flag is set
    when every particle was invalid and the set was re-seeded uniformly
    over free space.
    """
    poses = motion_update(poses, odom_delta, cfg.alphas, motion_rng)
    lx, ly = subsample_endpoints(scan, max_range, cfg.beam_subsample)
    if lx.size:
        log_weights = log_weights + kernels.mcl_log_weights(
            field.distances,
            field.origin.x,
            field.origin.y,
            field.resolution,
            poses,
            lx,
            ly,
            cfg.z_hit,
            cfg.z_rand,
            cfg.sigma_hit,
        )
    # Invalidate particles standing in occupied cells or off the map.
    cols = np.floor((poses[:, 0] - grid.origin.x) / grid.resolution).astype(int)
    rows = np.floor((poses[:, 1] - grid.origin.y) / grid.resolution).astype(int)
    inb = (cols >= 0) & (cols < grid.width) & (rows >= 0) & (rows < grid.height)
    occ = grid.occ_mask()
    bad = ~inb
    bad[inb] = occ[rows[inb], cols[inb]]
    log_weights = np.where(bad, -np.inf, log_weights)

    reset = bool(np.isneginf(log_weights).all())
    if reset:
        poses = mcl_init_uniform_free(grid, poses.shape[0], resample_rng)
        log_weights = np.zeros(poses.shape[0])
    peak = log_weights.max()
    w = np.exp(log_weights - peak)
    w /= w.sum()
    estimate = estimate_from(poses, w, scan.stamp)
    n = poses.shape[0]
    if estimate.n_eff < cfg.resample_ratio * n:
        positions = resample_rng.uniform(0.0, 1.0 / n) + np.arange(n) / n
        cumulative = np.cumsum(w)
        cumulative[-1] = 1.0
        picks = np.minimum(np.searchsorted(cumulative, positions, side="right"), n - 1)
        poses = poses[picks].copy()
        log_weights = np.full(n, -math.log(n))
    else:
        log_weights = np.log(w)
    return poses, log_weights, estimate, reset


class MclFilter:
    """Stateful wrapper: known map, particle arrays, per-purpose rng streams."""

    def __init__(self, grid: OccupancyGrid, cfg: MclConfig, seed: int, max_range: float):
        from mazeslam import rng as rngmod

        self.grid = grid
        self.cfg = cfg
        self.max_range = float(max_range)
        self.field = build_likelihood_field(grid, cfg.lf_d_max)
        self._init_rng = rngmod.stream(seed, "mcl_init")
        self._motion_rng = rngmod.stream(seed, "mcl_motion")
        self._resample_rng = rngmod.stream(seed, "mcl_resample")
        self.poses = np.zeros((cfg.n_particles, 3))
        self.log_weights = np.full(cfg.n_particles, -math.log(cfg.n_particles))
        self.reset_events = 0

    def init_gaussian(self, mean: Pose2, sigmas: tuple[float, float, float]) -> None:
        self.poses = mcl_init_gaussian(mean, sigmas, self.cfg.n_particles, self._init_rng)
        self.log_weights = np.full(self.cfg.n_particles, -math.log(self.cfg.n_particles))

    def init_uniform_free(self) -> None:
        self.poses = mcl_init_uniform_free(self.grid, self.cfg.n_particles, self._init_rng)
        self.log_weights = np.full(self.cfg.n_particles, -math.log(self.cfg.n_particles))

    def update(self, odom_delta: Pose2, scan: LidarScan) -> PoseEstimate:
        self.poses, self.log_weights, estimate, reset = mcl_update(
            self.poses,
            self.log_weights,
            odom_delta,
            scan,
            self.grid,
            self.field,
            self.cfg,
            self._motion_rng,
            self._resample_rng,
            self.max_range,
        )
        if reset:
            self.reset_events += 1
        return estimate
