"""Rao-Blackwellized particle-filter grid SLAM.

Each particle carries its own pose, map, cached likelihood field, and
trajectory. Per gated scan: sample the odometry motion model, hill-climb
scan match against the particle's map, reweight by the matched score,
integrate the scan, then resample when the effective sample size drops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from mazeslam import kernels
from mazeslam.geometry import Pose2, compose, wrap_angle
from mazeslam.grid import LikelihoodField, OccupancyGrid, build_likelihood_field, integrate_scan
from mazeslam.sensors import EndpointCache, LidarScan


@dataclass(frozen=True)
class SlamConfig:
    n_particles: int = 30
    resample_ratio: float = 0.5  # on N_eff / n
    linear_update: float = 0.25  # m between processed scans
    angular_update: float = 0.25  # rad between processed scans
    match_step_lin: float = 0.05  # initial hill-climb step, m
    match_step_ang: float = 0.025  # initial hill-climb step, rad
    match_halvings: int = 5
    match_sigma: float = 0.1  # m, endpoint score kernel width
    alphas: tuple[float, float, float, float] = (0.1, 0.1, 0.05, 0.05)
    lf_d_max: float = 1.0  # likelihood-field saturation distance, m
    # Odometry prior on the per-particle match objective, centered on the
    # noise-free propagated pose; damps frontier drag and spurious moves
    # in directions the map does not constrain.
    prior_sigma_xy: float = 0.05  # m; <= 0 disables the prior
    prior_sigma_theta: float = 0.03  # rad

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("need at least one particle")
        for name in ("linear_update", "angular_update", "match_step_lin", "match_step_ang"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class Particle:
    pose: Pose2
    log_weight: float
    map: OccupancyGrid
    field: LikelihoodField
    known: np.ndarray  # uint8 mask of cells ever touched by evidence
    trajectory: list[tuple[float, Pose2]] = dataclass_field(default_factory=list)

    def clone(self) -> "Particle":
        return Particle(
            pose=self.pose,
            log_weight=self.log_weight,
            map=self.map.copy(),
            field=LikelihoodField(
                self.field.resolution,
                self.field.origin,
                self.field.distances.copy(),
                self.field.d_max,
                self.field.has_occupied,
            ),
            known=self.known.copy(),
            trajectory=list(self.trajectory),
        )

    def refresh_cache(self, d_max: float) -> None:
        """Rebuild the likelihood field and known mask after integration."""
        self.field = build_likelihood_field(self.map, d_max)
        self.known = (self.map.cells != 0.0).astype(np.uint8)


def scan_score(
    field: LikelihoodField,
    pose: Pose2,
    endpoints: EndpointCache,
    match_sigma: float,
) -> float:
    """Mean Gaussian likelihood of a scan's hit endpoints under the field.

    Empty fields (no occupied cell anywhere) and scans without returns
    score exactly 0.
    """
    if len(endpoints) == 0 or not field.has_occupied:
        return 0.0
    return float(
        kernels.score_endpoints(
            field.distances,
            field.origin.x,
            field.origin.y,
            field.resolution,
            pose.x,
            pose.y,
            pose.theta,
            endpoints.lx,
            endpoints.ly,
            match_sigma,
        )
    )


def scan_match(
    field: LikelihoodField,
    endpoints: EndpointCache,
    init: Pose2,
    cfg: SlamConfig,
) -> tuple[Pose2, float]:
    """Greedy hill climb over the six axis moves with step halving.

    Deterministic; the returned score is never below the score at init.
    """
    if not field.has_occupied or len(endpoints) == 0:
        return init, 0.0
    best_pose = init
    best = scan_score(field, init, endpoints, cfg.match_sigma)
    step_lin = cfg.match_step_lin
    step_ang = cfg.match_step_ang
    halvings = 0
    while True:
        moved = False
        candidates = (
            Pose2(best_pose.x + step_lin, best_pose.y, best_pose.theta),
            Pose2(best_pose.x - step_lin, best_pose.y, best_pose.theta),
            Pose2(best_pose.x, best_pose.y + step_lin, best_pose.theta),
            Pose2(best_pose.x, best_pose.y - step_lin, best_pose.theta),
            Pose2(best_pose.x, best_pose.y, best_pose.theta + step_ang),
            Pose2(best_pose.x, best_pose.y, best_pose.theta - step_ang),
        )
        for cand in candidates:
            s = scan_score(field, cand, endpoints, cfg.match_sigma)
            if s > best:
                best = s
                best_pose = cand
                moved = True
        if not moved:
            if halvings >= cfg.match_halvings:
                break
            step_lin *= 0.5
            step_ang *= 0.5
            halvings += 1
    return best_pose, best


def match_with_prior(
    field: LikelihoodField,
    known: np.ndarray,
    endpoints: EndpointCache,
    init: Pose2,
    center: Pose2,
    cfg: SlamConfig,
) -> tuple[Pose2, float]:
    """Hill climb from ``init`` on the known-cell endpoint score times an
    odometry prior centered at ``center``.

    ``center`` is the noise-free odometry propagation, so the prior pulls
    injected proposal noise back out unless the map evidence supports it;
    scoring over known cells only keeps the unmapped frontier from
    dragging the optimum. The returned score is the plain (spec) scan
    score at the matched pose.
    """
    if not field.has_occupied or len(endpoints) == 0:
        return init, 0.0
    use_prior = cfg.prior_sigma_xy > 0 and cfg.prior_sigma_theta > 0
    inv_xy = 1.0 / (2.0 * cfg.prior_sigma_xy**2) if use_prior else 0.0
    inv_th = 1.0 / (2.0 * cfg.prior_sigma_theta**2) if use_prior else 0.0

    def objective(p: Pose2) -> float:
        s = kernels.score_endpoints_known(
            field.distances,
            known,
            field.origin.x,
            field.origin.y,
            field.resolution,
            p.x,
            p.y,
            p.theta,
            endpoints.lx,
            endpoints.ly,
            cfg.match_sigma,
        )
        if not use_prior:
            return s
        dx = p.x - center.x
        dy = p.y - center.y
        dth = wrap_angle(p.theta - center.theta)
        return s * math.exp(-(dx * dx + dy * dy) * inv_xy - dth * dth * inv_th)

    best_pose = init
    best = objective(init)
    step_lin = cfg.match_step_lin
    step_ang = cfg.match_step_ang
    halvings = 0
    while True:
        moved = False
        candidates = (
            Pose2(best_pose.x + step_lin, best_pose.y, best_pose.theta),
            Pose2(best_pose.x - step_lin, best_pose.y, best_pose.theta),
            Pose2(best_pose.x, best_pose.y + step_lin, best_pose.theta),
            Pose2(best_pose.x, best_pose.y - step_lin, best_pose.theta),
            Pose2(best_pose.x, best_pose.y, best_pose.theta + step_ang),
            Pose2(best_pose.x, best_pose.y, best_pose.theta - step_ang),
        )
        for cand in candidates:
            s = objective(cand)
            if s > best:
                best = s
                best_pose = cand
                moved = True
        if not moved:
            if halvings >= cfg.match_halvings:
                break
            step_lin *= 0.5
            step_ang *= 0.5
            halvings += 1
    return best_pose, scan_score(field, best_pose, endpoints, cfg.match_sigma)


def decompose_delta(delta: Pose2) -> tuple[float, float, float]:
    """Split a body-frame pose delta into rot1, trans, rot2.

    Near-zero translations take rot1 = 0: the bearing of a micron-scale
    displacement is numerical noise and would otherwise inject huge
    spurious rotation (and, through alpha4, translation) variance.
    """
    trans = math.hypot(delta.x, delta.y)
    rot1 = math.atan2(delta.y, delta.x) if trans > 1e-3 else 0.0
    rot2 = wrap_angle(delta.theta - rot1)
    return rot1, trans, rot2


def sample_odometry_motion(
    prev: Pose2,
    decomposed: tuple[float, float, float],
    alphas: tuple[float, float, float, float],
    rng: np.random.Generator,
) -> Pose2:
    """Apply a rot1-trans-rot2 odometry step with motion-scaled noise."""
    rot1, trans, rot2 = decomposed
    a1, a2, a3, a4 = alphas
    noise = rng.standard_normal(3)
    r1 = rot1 + noise[0] * math.sqrt(a1 * rot1**2 + a2 * trans**2)
    tr = trans + noise[1] * math.sqrt(a3 * trans**2 + a4 * (rot1**2 + rot2**2))
    r2 = rot2 + noise[2] * math.sqrt(a1 * rot2**2 + a2 * trans**2)
    return Pose2(
        prev.x + tr * math.cos(prev.theta + r1),
        prev.y + tr * math.sin(prev.theta + r1),
        wrap_angle(prev.theta + r1 + r2),
    )


def normalized_weights(particles: list[Particle]) -> np.ndarray:
    logs = np.array([p.log_weight for p in particles])
    peak = logs.max()
    if not np.isfinite(peak):
        return np.full(len(particles), 1.0 / len(particles))
    w = np.exp(logs - peak)
    return w / w.sum()


def normalize(particles: list[Particle]) -> np.ndarray:
    w = normalized_weights(particles)
    for p, wi in zip(particles, w):
        p.log_weight = math.log(wi) if wi > 0 else -math.inf
    return w


def n_eff(weights: np.ndarray) -> float:
    return float(1.0 / np.square(weights).sum())


def resample_low_variance(
    particles: list[Particle], rng: np.random.Generator, n: int | None = None
) -> list[Particle]:
    """Systematic resampling with a single uniform draw.

    Output weights are uniform; maps are deep-copied when a particle is
    selected more than once so mutation stays isolated.
    """
    if n is None:
        n = len(particles)
    weights = normalized_weights(particles)
    positions = (rng.uniform(0.0, 1.0 / n) + np.arange(n) / n)
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0  # guard against float shortfall
    picks = np.searchsorted(cumulative, positions, side="right")
    picks = np.minimum(picks, len(particles) - 1)
    out: list[Particle] = []
    seen: set[int] = set()
    log_uniform = -math.log(n)
    for idx in picks:
        idx = int(idx)
        if idx in seen:
            chosen = particles[idx].clone()
        else:
            chosen = particles[idx]
            seen.add(idx)
        chosen.log_weight = log_uniform
        out.append(chosen)
    return out


@dataclass
class SlamStepInfo:
    stamp: float
    best_index: int
    n_eff: float
    resampled: bool
    degenerate: bool
    best_score: float


def slam_process_scan(
    particles: list[Particle],
    odom_delta: Pose2,
    scan: LidarScan,
    cfg: SlamConfig,
    motion_rngs: list[np.random.Generator],
    resample_rng: np.random.Generator,
    max_range: float,
) -> tuple[list[Particle], SlamStepInfo]:
    """One gated SLAM update. Caller enforces the motion gate; asserted here."""
    decomposed = decompose_delta(odom_delta)
    rot1, trans, rot2 = decomposed
    assert (
        trans >= cfg.linear_update - 1e-9 or abs(wrap_angle(rot1 + rot2)) >= cfg.angular_update - 1e-9
    ), "slam_process_scan called below the motion gate"
    endpoints = EndpointCache.from_scan(scan, max_range)
    scores = np.empty(len(particles))
    for i, p in enumerate(particles):
        sampled = sample_odometry_motion(p.pose, decomposed, cfg.alphas, motion_rngs[i])
        propagated = compose(p.pose, odom_delta)
        matched, score = match_with_prior(p.field, p.known, endpoints, sampled, propagated, cfg)
        if p.map.world_to_cell(matched.x, matched.y) is None:
            # runaway hypothesis: kill its weight, leave its map alone
            p.log_weight = -math.inf
            scores[i] = 0.0
            p.pose = matched
            p.trajectory.append((scan.stamp, matched))
            continue
        scores[i] = score
        p.log_weight += math.log(score) if score > 0 else -math.inf
        integrate_scan(p.map, matched, scan, max_range)
        p.refresh_cache(cfg.lf_d_max)
        p.pose = matched
        p.trajectory.append((scan.stamp, matched))
    degenerate = bool((scores == 0.0).all())
    if degenerate:
        for p in particles:
            p.log_weight = -math.log(len(particles))
    weights = normalize(particles)
    best_index = int(np.argmax(weights))
    neff = n_eff(weights)
    resampled = neff < cfg.resample_ratio * len(particles)
    if resampled:
        particles = resample_low_variance(particles, resample_rng)
    info = SlamStepInfo(
        stamp=scan.stamp,
        best_index=best_index,
        n_eff=neff,
        resampled=resampled,
        degenerate=degenerate,
        best_score=float(scores[best_index]),
    )
    return particles, info


class SlamRunner:
    """Feeds odometry poses and scans into the particle filter.

    The first scan bootstraps every particle's map at the initial pose;
    later scans are processed once the odometry has moved past the
    linear/angular update gate.
    """

    def __init__(
        self,
        cfg: SlamConfig,
        grid_template: OccupancyGrid,
        init_pose: Pose2,
        seed: int,
        max_range: float,
    ):
        from mazeslam import rng as rngmod

        self.cfg = cfg
        self.max_range = float(max_range)
        self.particles = [
            Particle(
                pose=init_pose,
                log_weight=-math.log(cfg.n_particles),
                map=grid_template.copy(),
                field=build_likelihood_field(grid_template, cfg.lf_d_max),
                known=np.zeros(grid_template.cells.shape, dtype=np.uint8),
                trajectory=[],
            )
            for _ in range(cfg.n_particles)
        ]
        self._motion_rngs = [
            rngmod.stream(seed, "slam_motion", i) for i in range(cfg.n_particles)
        ]
        self._resample_rng = rngmod.stream(seed, "slam_resample")
        self._odom_pose = Pose2()
        self._odom_at_update = Pose2()
        self._bootstrapped = False
        self.degenerate_events = 0
        self.steps: list[SlamStepInfo] = []

    def observe_odometry(self, pose: Pose2) -> None:
        self._odom_pose = pose

    def observe_scan(self, scan: LidarScan) -> SlamStepInfo | None:
        if not self._bootstrapped:
            for p in self.particles:
                integrate_scan(p.map, p.pose, scan, self.max_range)
                p.refresh_cache(self.cfg.lf_d_max)
                p.trajectory.append((scan.stamp, p.pose))
            self._bootstrapped = True
            self._odom_at_update = self._odom_pose
            return None
        from mazeslam.geometry import between

        delta = between(self._odom_at_update, self._odom_pose)
        trans = math.hypot(delta.x, delta.y)
        if trans < self.cfg.linear_update and abs(delta.theta) < self.cfg.angular_update:
            return None
        self.particles, info = slam_process_scan(
            self.particles,
            delta,
            scan,
            self.cfg,
            self._motion_rngs,
            self._resample_rng,
            self.max_range,
        )
        if info.degenerate:
            self.degenerate_events += 1
        self._odom_at_update = self._odom_pose
        self.steps.append(info)
        return info

    def best(self) -> Particle:
        weights = normalized_weights(self.particles)
        return self.particles[int(np.argmax(weights))]


def rasterize_scan_outline(
    scan: LidarScan, max_range: float, resolution: float, origin: Pose2, shape: tuple[int, int],
    max_gap: float = 0.3,
) -> np.ndarray:
    """Occupancy mask of the polyline through a scan's hit endpoints.

    Grazing beams leave growing gaps between endpoint cells on flat
    walls; connecting angle-adjacent endpoints (when they are close
    enough to belong to one surface) fills the wall solid, which is what
    scan-to-scan matching needs as its reference.
    """
    from mazeslam.kernels import numpy_impl

    h, w = shape
    mask = np.zeros(shape, dtype=bool)
    hits = scan.returns_mask(max_range)
    r = scan.ranges
    xs = r * np.cos(scan.angles)
    ys = r * np.sin(scan.angles)
    n = scan.n_beams
    idx = np.nonzero(hits)[0]
    for k in idx:
        cell = (
            int(math.floor((xs[k] - origin.x) / resolution)),
            int(math.floor((ys[k] - origin.y) / resolution)),
        )
        if 0 <= cell[0] < w and 0 <= cell[1] < h:
            mask[cell[1], cell[0]] = True
    pairs = list(zip(idx, idx[1:]))
    if n >= 2 and hits[0] and hits[-1]:
        pairs.append((idx[-1], idx[0]))  # close the loop for full-circle scans
    for a, b in pairs:
        if b != a + 1 and not (a == idx[-1] and b == idx[0]):
            continue
        gap = math.hypot(xs[b] - xs[a], ys[b] - ys[a])
        if gap > max_gap:
            continue
        ii, jj, _ = numpy_impl._beam_cells(
            origin.x, origin.y, resolution, xs[a], ys[a], xs[b], ys[b]
        )
        keep = (ii >= 0) & (ii < w) & (jj >= 0) & (jj < h)
        mask[jj[keep], ii[keep]] = True
    return mask


def make_scan_matcher(
    max_range: float,
    resolution: float = 0.05,
    cfg: SlamConfig | None = None,
    window_xy: float = 0.25,
    window_theta: float = 0.1,
    coarse_step: float = 0.05,
    baseline: float = 1.7,
):
    """Scan-to-reference matcher: the visual-odometry surrogate.

    Rasterizes the reference scan's endpoint polyline (cached while the
    reference stays the same), runs a correlative coarse search in a
    window around the initial delta guess, then refines by hill climbing
    on a bilinearly interpolated likelihood field. ``baseline`` is the
    largest expected displacement from the reference; the scratch grid
    is sized so no endpoint falls off it within that baseline.
    """
    cfg = dataclasses_replace_noprior(cfg or SlamConfig())
    span = max_range + baseline + 0.3
    cells = math.ceil(2.0 * span / resolution)
    origin = Pose2(-span, -span, 0.0)
    shape = (cells, cells)
    dx = np.arange(-window_xy, window_xy + 1e-9, coarse_step)
    dth = np.arange(-window_theta, window_theta + 1e-9, coarse_step / 2.0)
    gx, gy, gt = np.meshgrid(dx, dx, dth, indexing="ij")
    offsets = np.column_stack([gx.ravel(), gy.ravel(), gt.ravel()])
    cache: dict = {"ref": None, "field": None}

    def bilinear_scores(field, poses: np.ndarray, endpoints: EndpointCache) -> np.ndarray:
        return kernels.score_endpoints_bilinear(
            field.distances,
            field.origin.x,
            field.origin.y,
            field.resolution,
            poses,
            endpoints.lx,
            endpoints.ly,
            cfg.match_sigma,
        )

    def match(ref_scan: LidarScan, scan: LidarScan, init: Pose2) -> tuple[Pose2, float]:
        from mazeslam.grid import likelihood_field_from_mask

        if cache["ref"] is not ref_scan:
            mask = rasterize_scan_outline(ref_scan, max_range, resolution, origin, shape)
            cache["field"] = likelihood_field_from_mask(mask, resolution, origin, cfg.lf_d_max)
            cache["ref"] = ref_scan
        field = cache["field"]
        endpoints = EndpointCache.from_scan(scan, max_range)
        if not field.has_occupied or len(endpoints) == 0:
            return init, 0.0
        candidates = offsets + np.array([init.x, init.y, init.theta])
        scores = bilinear_scores(field, candidates, endpoints)
        k = int(np.argmax(scores))
        pose = Pose2(candidates[k, 0], candidates[k, 1], candidates[k, 2])
        best = float(scores[k])
        step_lin = coarse_step
        step_ang = coarse_step / 2.0
        halvings = 0
        while True:
            cands = np.array(
                [
                    [pose.x + step_lin, pose.y, pose.theta],
                    [pose.x - step_lin, pose.y, pose.theta],
                    [pose.x, pose.y + step_lin, pose.theta],
                    [pose.x, pose.y - step_lin, pose.theta],
                    [pose.x, pose.y, pose.theta + step_ang],
                    [pose.x, pose.y, pose.theta - step_ang],
                ]
            )
            s = bilinear_scores(field, cands, endpoints)
            k = int(np.argmax(s))
            if s[k] > best:
                best = float(s[k])
                pose = Pose2(cands[k, 0], cands[k, 1], cands[k, 2])
                continue
            if halvings >= cfg.match_halvings + 3:
                break
            step_lin *= 0.5
            step_ang *= 0.5
            halvings += 1
        return pose, best

    return match


def dataclasses_replace_noprior(cfg: SlamConfig) -> SlamConfig:
    """VO matching runs without the odometry prior."""
    import dataclasses

    return dataclasses.replace(cfg, prior_sigma_xy=0.0, prior_sigma_theta=0.0)
