"""Offline experiment engines tying the pieces together.

Everything here consumes sensor logs (lists of record dicts) plus a
RunConfig and produces maps, trajectories, and error series. The CLI,
the live server, and the tests all go through these functions so live
and offline runs share one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mazeslam.config import RunConfig
from mazeslam.errors import InputFileError
from mazeslam.fusion import run_fusion
from mazeslam.geometry import Pose2, Twist2, between
from mazeslam.grid import OccupancyGrid, rasterize_world
from mazeslam.logio import gt_trajectory, scan_from_record
from mazeslam.mcl import MclFilter, PoseEstimate
from mazeslam.simulator import Simulator, step_exact
from mazeslam.slam import Particle, SlamRunner, make_scan_matcher
from mazeslam.world import WorldModel, bundled_world_path, load_world


def resolve_world(spec: str) -> WorldModel:
    """Load a world from a path or a bundled:<name> reference."""
    if spec.startswith("bundled:"):
        path = bundled_world_path(spec.split(":", 1)[1])
        if not path.exists():
            raise InputFileError(f"no bundled world named {spec.split(':', 1)[1]!r}")
        return load_world(path)
    return load_world(Path(spec))


def build_simulator(world: WorldModel, cfg: RunConfig) -> Simulator:
    return Simulator(
        world,
        params=cfg.robot,
        lidar=cfg.lidar,
        imu=cfg.imu,
        odom=cfg.odom_noise,
        dt=cfg.sim.dt,
        scan_every=cfg.sim.scan_every,
        seed=cfg.seed,
    )


def simulate_script(world: WorldModel, cfg: RunConfig, script: list[tuple[float, float, float]]) -> list[dict]:
    """Drive the simulator through timed (duration, v, w) segments."""
    sim = build_simulator(world, cfg)
    records: list[dict] = []
    for dur, v, w in script:
        steps = max(1, round(dur / cfg.sim.dt))
        for _ in range(steps):
            records.extend(sim.step(Twist2(v, w)))
    return records


def simulate_from_log(world: WorldModel, cfg: RunConfig, source_records: list[dict]) -> list[dict]:
    """Re-drive the simulator with the cmd stream of an earlier log."""
    sim = build_simulator(world, cfg)
    records: list[dict] = []
    for rec in source_records:
        if rec["type"] == "cmd":
            records.extend(sim.step(Twist2(rec["v"], rec["w"])))
    return records


def map_template(world: WorldModel, cfg: RunConfig) -> OccupancyGrid:
    """Empty SLAM grid covering the world bounds plus the config margin."""
    xmin, ymin, xmax, ymax = world.bounds
    m = cfg.slam.map_margin
    res = cfg.slam.resolution
    width = math.ceil((xmax - xmin + 2 * m) / res)
    height = math.ceil((ymax - ymin + 2 * m) / res)
    return OccupancyGrid.empty(width, height, res, Pose2(xmin - m, ymin - m, 0.0))


def odometry_timeline(records: list[dict], mode: str, cfg: RunConfig, init_pose: Pose2) -> np.ndarray:
    """Odometry-grade pose per stamp, as an (N, 4) t,x,y,theta array.

    gt-odom reads ground truth straight from the log; the other modes run
    the EKF over the log's sensor streams.
    """
    if mode == "gt-odom":
        rows = gt_trajectory(records)
        if rows.shape[0] == 0:
            raise InputFileError("log has no ground-truth records for gt-odom mode")
        return rows
    matcher = None
    if mode == "encoderless":
        import dataclasses

        vo_cfg = dataclasses.replace(cfg.slam, match_sigma=cfg.fusion.vo_match_sigma)
        matcher = make_scan_matcher(
            cfg.lidar.max_range, resolution=cfg.slam.resolution, cfg=vo_cfg
        )
    result = run_fusion(records, mode, init_pose=init_pose, params=cfg.fusion, scan_matcher=matcher)
    rows = [(s.stamp, s.mean[0], s.mean[1], s.mean[2]) for s in result.trajectory]
    if not rows:
        raise InputFileError("log has no records usable for odometry fusion")
    return np.asarray(rows, dtype=float)


def _pose_at(timeline: np.ndarray, stamp: float) -> Pose2:
    """Last odometry pose at or before ``stamp`` (first row as fallback)."""
    idx = int(np.searchsorted(timeline[:, 0], stamp + 1e-9)) - 1
    idx = max(idx, 0)
    return Pose2(timeline[idx, 1], timeline[idx, 2], timeline[idx, 3])


@dataclass
class SlamResult:
    best: Particle
    runner: SlamRunner
    trajectory: np.ndarray  # (N, 4) t,x,y,theta of the best particle
    n_scans: int
    n_updates: int


def run_slam(records: list[dict], cfg: RunConfig, world: WorldModel, mode: str | None = None) -> SlamResult:
    mode = mode or cfg.mode
    init_pose = world.spawn
    timeline = odometry_timeline(records, mode, cfg, init_pose)
    runner = SlamRunner(
        cfg.slam,
        map_template(world, cfg),
        init_pose,
        cfg.seed,
        cfg.lidar.max_range,
    )
    n_scans = 0
    for rec in records:
        if rec["type"] != "scan":
            continue
        n_scans += 1
        scan = scan_from_record(rec)
        runner.observe_odometry(_pose_at(timeline, scan.stamp))
        runner.observe_scan(scan)
    best = runner.best()
    rows = np.asarray(
        [(t, p.x, p.y, p.theta) for t, p in best.trajectory], dtype=float
    ).reshape(-1, 4)
    return SlamResult(best, runner, rows, n_scans, len(runner.steps))


@dataclass
class LocalizeResult:
    estimates: np.ndarray  # (N, 4) t,x,y,theta
    errors: np.ndarray  # (N, 3) stamp, pos_err_m, heading_err_rad (vs gt, when present)
    history: list[PoseEstimate] = field(default_factory=list)
    reset_events: int = 0


def run_localize(
    records: list[dict],
    grid: OccupancyGrid,
    cfg: RunConfig,
    init_mean: Pose2 | None = None,
) -> LocalizeResult:
    """MCL over a log against a known map.

    Motion comes from dead-reckoned wheel odometry; one filter update per
    scan record. Errors are computed against the log's gt records.
    """
    mcl = MclFilter(grid, cfg.mcl, cfg.seed, cfg.lidar.max_range)
    if cfg.mcl.init_mode == "uniform_free":
        mcl.init_uniform_free()
    else:
        if init_mean is None:
            gts = gt_trajectory(records)
            if gts.shape[0] == 0:
                raise InputFileError("gaussian init needs an init pose or gt records")
            init_mean = Pose2(gts[0, 1], gts[0, 2], gts[0, 3])
        mcl.init_gaussian(init_mean, cfg.mcl.init_sigmas)
    truth = gt_trajectory(records)
    dr = Pose2()
    dr_at_update = Pose2()
    last_t: float | None = None
    estimates = []
    errors = []
    history: list[PoseEstimate] = []
    for rec in records:
        kind = rec["type"]
        t = float(rec["t"])
        if kind == "odom":
            dt = cfg.sim.dt if last_t is None else max(t - last_t, 1e-9)
            dr = step_exact(dr, Twist2(rec["v"], rec["w"]), dt)
            last_t = t
        elif kind == "scan":
            delta = between(dr_at_update, dr)
            dr_at_update = dr
            est = mcl.update(delta, scan_from_record(rec))
            history.append(est)
            estimates.append((t, est.mean.x, est.mean.y, est.mean.theta))
            if truth.shape[0]:
                idx = int(np.argmin(np.abs(truth[:, 0] - t)))
                pos_err = math.hypot(
                    est.mean.x - truth[idx, 1], est.mean.y - truth[idx, 2]
                )
                head_err = abs(
                    float(np.arctan2(
                        math.sin(est.mean.theta - truth[idx, 3]),
                        math.cos(est.mean.theta - truth[idx, 3]),
                    ))
                )
                errors.append((t, pos_err, head_err))
    return LocalizeResult(
        estimates=np.asarray(estimates, dtype=float).reshape(-1, 4),
        errors=np.asarray(errors, dtype=float).reshape(-1, 3),
        history=history,
        reset_events=mcl.reset_events,
    )


def truth_raster(world: WorldModel, cfg: RunConfig) -> OccupancyGrid:
    return rasterize_world(world, cfg.slam.resolution)
