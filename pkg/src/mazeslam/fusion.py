"""EKF odometry fusion.

State is (x, y, theta, v, w) with a 5x5 covariance. Measurements are
gyro rate, wheel-odometry twist, or a body-frame pose delta produced by
matching consecutive scans (the encoder-less visual-odometry stand-in).
Updates use the Joseph-form covariance step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from mazeslam.geometry import Pose2, between, compose, wrap_angle
from mazeslam.logio import scan_from_record
from mazeslam.sensors import LidarScan


@dataclass
class FusedState:
    stamp: float
    mean: np.ndarray  # (5,) x, y, theta, v, w
    cov: np.ndarray  # (5, 5)

    @property
    def pose(self) -> Pose2:
        return Pose2(self.mean[0], self.mean[1], self.mean[2])

    @property
    def v(self) -> float:
        return float(self.mean[3])

    @property
    def w(self) -> float:
        return float(self.mean[4])

    @classmethod
    def initial(cls, pose: Pose2, stamp: float = 0.0) -> "FusedState":
        mean = np.array([pose.x, pose.y, pose.theta, 0.0, 0.0])
        cov = np.diag([1e-6, 1e-6, 1e-6, 1e-2, 1e-2])
        return cls(stamp, mean, cov)


@dataclass
class Measurement:
    kind: str  # gyro | wheel_odom | pose_delta
    z: np.ndarray
    R: np.ndarray
    stamp: float
    dt: float = 0.0  # pose_delta only: time spanned by the delta

    def __post_init__(self):
        self.z = np.atleast_1d(np.asarray(self.z, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if self.kind not in ("gyro", "wheel_odom", "pose_delta"):
            raise ValueError(f"unknown measurement kind {self.kind!r}")
        if self.kind == "pose_delta" and self.dt <= 0:
            raise ValueError("pose_delta needs dt > 0")
        eigs = np.linalg.eigvalsh(0.5 * (self.R + self.R.T))
        if eigs.min() <= 0 or not np.allclose(self.R, self.R.T, atol=1e-12):
            raise ValueError("measurement noise R must be symmetric positive definite")


@dataclass
class UpdateInfo:
    innovation: np.ndarray
    rejected: bool = False


def ekf_predict(s: FusedState, dt: float, q_accel: float = 1.0, q_alpha: float = 4.0) -> FusedState:
    """Constant-twist unicycle propagation with analytic Jacobian."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x, y, th, v, w = s.mean
    c, sn = math.cos(th), math.sin(th)
    mean = np.array([x + v * c * dt, y + v * sn * dt, wrap_angle(th + w * dt), v, w])
    F = np.eye(5)
    F[0, 2] = -v * sn * dt
    F[0, 3] = c * dt
    F[1, 2] = v * c * dt
    F[1, 3] = sn * dt
    F[2, 4] = dt
    Q = np.diag([0.0, 0.0, 0.0, q_accel * dt, q_alpha * dt])
    cov = F @ s.cov @ F.T + Q
    return FusedState(s.stamp + dt, mean, 0.5 * (cov + cov.T))


def _measurement_model(s: FusedState, z: Measurement) -> tuple[np.ndarray, np.ndarray]:
    """Predicted measurement h(s) and Jacobian H for each kind."""
    v, w = s.mean[3], s.mean[4]
    if z.kind == "gyro":
        h = np.array([w])
        H = np.array([[0.0, 0.0, 0.0, 0.0, 1.0]])
    elif z.kind == "wheel_odom":
        h = np.array([v, w])
        H = np.array([[0.0, 0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0, 1.0]])
    else:  # pose_delta: body-frame (dx, dy, dtheta) over z.dt
        h = np.array([v * z.dt, 0.0, w * z.dt])
        H = np.zeros((3, 5))
        H[0, 3] = z.dt
        H[2, 4] = z.dt
    return h, H


def ekf_update(s: FusedState, z: Measurement) -> tuple[FusedState, UpdateInfo]:
    """Standard EKF update; a non-PD innovation covariance rejects the
    measurement and leaves the state untouched (flagged in the result)."""
    h, H = _measurement_model(s, z)
    innovation = z.z - h
    if z.kind == "pose_delta":
        innovation[2] = wrap_angle(innovation[2])
    S = H @ s.cov @ H.T + z.R
    try:
        chol = np.linalg.cholesky(0.5 * (S + S.T))
    except np.linalg.LinAlgError:
        return s, UpdateInfo(innovation, rejected=True)
    # K = P H^T S^-1 via the Cholesky factor
    K = np.linalg.solve(chol.T, np.linalg.solve(chol, H @ s.cov)).T
    mean = s.mean + K @ innovation
    mean[2] = wrap_angle(mean[2])
    ikh = np.eye(5) - K @ H
    cov = ikh @ s.cov @ ikh.T + K @ z.R @ K.T
    return FusedState(max(s.stamp, z.stamp), mean, 0.5 * (cov + cov.T)), UpdateInfo(innovation)


@dataclass(frozen=True)
class FusionParams:
    q_accel: float = 1.0
    q_alpha: float = 4.0
    sigma_gyro: float = 0.02
    odom_sigma_v: float = 0.02
    odom_sigma_w: float = 0.05
    # pose_delta noise floor, scaled by 1 / scan-match score
    delta_floor: tuple[float, float, float] = (0.01, 0.01, 0.02)
    min_match_score: float = 1e-3
    # visual-odometry surrogate: match every vo_stride-th scan against a
    # keyframe scan so per-match noise telescopes instead of accumulating;
    # re-key when the baseline grows or the match degrades
    vo_stride: int = 5
    vo_match_sigma: float = 0.05
    vo_keyframe_trans: float = 1.2  # m of baseline before re-keying
    vo_keyframe_rot: float = 0.5  # rad of baseline before re-keying
    vo_rekey_score: float = 0.5  # rekey below this match score


@dataclass
class FusionResult:
    trajectory: list[FusedState] = field(default_factory=list)
    skipped: int = 0
    rejected: int = 0


# A scan matcher takes (previous scan, current scan, initial delta guess)
# and returns the matched body-frame delta and its score in [0, 1].
ScanMatcher = Callable[[LidarScan, LidarScan, Pose2], tuple[Pose2, float]]


def run_fusion(
    records: list[dict],
    mode: str,
    init_pose: Pose2 = Pose2(),
    params: FusionParams = FusionParams(),
    scan_matcher: Optional[ScanMatcher] = None,
) -> FusionResult:
    """Fuse a sensor log into an odometry trajectory.

    with_encoders consumes gyro + wheel odometry; encoderless consumes
    gyro + scan-match pose deltas (``scan_matcher`` required). Records
    more than 1e-6 s out of order are skipped and counted.
    """
    if mode not in ("with_encoders", "encoderless"):
        raise ValueError(f"unknown fusion mode {mode!r}")
    if mode == "encoderless" and scan_matcher is None:
        raise ValueError("encoderless fusion needs a scan matcher")
    result = FusionResult()
    state = FusedState.initial(init_pose)
    kf_scan: Optional[LidarScan] = None  # current keyframe scan
    kf_offset = Pose2()  # last matched pose relative to the keyframe
    prev_scan_t = 0.0
    prev_scan_theta = init_pose.theta
    scan_count = 0
    for rec in records:
        kind = rec["type"]
        if kind == "imu":
            wanted = True
        elif kind == "odom":
            wanted = mode == "with_encoders"
        elif kind == "scan":
            wanted = mode == "encoderless"
            if wanted:
                keep = scan_count % params.vo_stride == 0
                scan_count += 1
                wanted = keep
        else:
            wanted = False
        if not wanted:
            continue
        t = float(rec["t"])
        if t < state.stamp - 1e-6:
            result.skipped += 1
            continue
        if t > state.stamp:
            state = ekf_predict(state, t - state.stamp, params.q_accel, params.q_alpha)
        if kind == "imu":
            z = Measurement("gyro", [rec["gyro_z"]], [[params.sigma_gyro**2]], t)
        elif kind == "odom":
            z = Measurement(
                "wheel_odom",
                [rec["v"], rec["w"]],
                np.diag([params.odom_sigma_v**2, params.odom_sigma_w**2]),
                t,
            )
        else:
            scan = scan_from_record(rec)
            if kf_scan is None:
                kf_scan, prev_scan_t = scan, t
                kf_offset = Pose2()
                prev_scan_theta = state.mean[2]
                result.trajectory.append(state)
                continue
            dt = t - prev_scan_t
            # rotation guess from the gyro-tracked heading over the interval
            dtheta = wrap_angle(state.mean[2] - prev_scan_theta)
            predicted = Pose2(state.v * dt, 0.0, dtheta)
            init = compose(kf_offset, predicted)
            matched, score = scan_matcher(kf_scan, scan, init)
            delta = between(kf_offset, matched)
            prev_scan_t = t
            prev_scan_theta = state.mean[2]
            if (
                math.hypot(matched.x, matched.y) > params.vo_keyframe_trans
                or abs(matched.theta) > params.vo_keyframe_rot
                or score < params.vo_rekey_score
            ):
                kf_scan = scan
                kf_offset = Pose2()
            else:
                kf_offset = matched
            scale = 1.0 / max(score, params.min_match_score)
            R = np.diag([(f**2) * scale for f in params.delta_floor])
            z = Measurement("pose_delta", [delta.x, delta.y, delta.theta], R, t, dt=dt)
        state, info = ekf_update(state, z)
        if info.rejected:
            result.rejected += 1
        result.trajectory.append(state)
    return result
