"""Deterministic maze-world simulator.

Fixed-step differential-drive kinematics with exact arc integration,
segment raycast lidar, gyro synthesis with random-walk bias, and noisy
wheel odometry. The simulator is the ground-truth source: every step can
emit the sensor records that make up a replayable log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from mazeslam import kernels, rng as rngmod
from mazeslam.geometry import Pose2, Twist2, wrap_angle
from mazeslam.sensors import ImuSample, LidarScan
from mazeslam.world import WorldModel

SIM_DT = 0.05  # 20 Hz fixed step
SCAN_EVERY = 2  # scans at 10 Hz


@dataclass(frozen=True)
class RobotParams:
    wheel_radius: float = 0.05
    wheel_base: float = 0.30
    body_radius: float = 0.18
    max_v: float = 0.5
    max_w: float = 1.5

    def __post_init__(self):
        for name in ("wheel_radius", "wheel_base", "body_radius", "max_v", "max_w"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.body_radius < self.wheel_base / 2:
            raise ValueError("body_radius must cover the axle track")


@dataclass(frozen=True)
class LidarConfig:
    n_beams: int = 180
    fov: float = 2.0 * math.pi
    max_range: float = 4.0
    sigma_range: float = 0.01
    min_range: float = 0.1

    def __post_init__(self):
        if self.n_beams < 2:
            raise ValueError("need at least 2 beams")
        if not (0 < self.fov <= 2.0 * math.pi + 1e-12):
            raise ValueError("fov must be in (0, 2pi]")
        if not (0 <= self.min_range < self.max_range):
            raise ValueError("need 0 <= min_range < max_range")

    def beam_angles(self) -> np.ndarray:
        """Beam directions in the robot frame, strictly increasing.

        A full-circle fov spaces beams by fov/n so -pi and +pi do not both
        appear; narrower fovs span [-fov/2, fov/2] inclusive.
        """
        if self.fov >= 2.0 * math.pi - 1e-9:
            inc = self.fov / self.n_beams
            return -math.pi + inc * np.arange(self.n_beams)
        inc = self.fov / (self.n_beams - 1)
        return -self.fov / 2.0 + inc * np.arange(self.n_beams)

    @property
    def no_return(self) -> float:
        return self.max_range + 1.0


@dataclass(frozen=True)
class ImuConfig:
    sigma_gyro: float = 0.02  # rad/s white noise
    sigma_bias_walk: float = 5e-5  # rad/s per sqrt(s), MEMS-grade bias instability


@dataclass(frozen=True)
class OdomNoise:
    sigma_v: float = 0.02  # m/s
    sigma_w: float = 0.05  # rad/s


@dataclass(frozen=True)
class SimState:
    clock: float
    true_pose: Pose2
    commanded: Twist2
    collision: bool
    seed: int


def wheels_to_twist(w_left: float, w_right: float, params: RobotParams) -> Twist2:
    """Differential-drive map from wheel rates (rad/s) to a body twist."""
    v = params.wheel_radius * (w_left + w_right) / 2.0
    w = params.wheel_radius * (w_right - w_left) / params.wheel_base
    return Twist2(v, w)


def step_exact(pose: Pose2, cmd: Twist2, dt: float) -> Pose2:
    """Exact unicycle integration over dt: straight line or circular arc."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if abs(cmd.w) < 1e-9:
        return Pose2(
            pose.x + cmd.v * math.cos(pose.theta) * dt,
            pose.y + cmd.v * math.sin(pose.theta) * dt,
            pose.theta,
        )
    radius = cmd.v / cmd.w
    theta1 = pose.theta + cmd.w * dt
    return Pose2(
        pose.x + radius * (math.sin(theta1) - math.sin(pose.theta)),
        pose.y - radius * (math.cos(theta1) - math.cos(pose.theta)),
        wrap_angle(theta1),
    )


def raycast_world(world: WorldModel, origin, angle: float, max_range: float):
    """Nearest wall hit along one ray, or None when nothing is in range."""
    if not world.contains(origin[0], origin[1]):
        raise ValueError("ray origin lies outside world bounds")
    d = kernels.raycast_segments(
        float(origin[0]), float(origin[1]), np.array([float(angle)]), world.segments, max_range
    )[0]
    return None if d < 0 else float(d)


def simulate_lidar(
    world: WorldModel,
    pose: Pose2,
    cfg: LidarConfig,
    rng: np.random.Generator,
    stamp: float = 0.0,
) -> LidarScan:
    """Raycast every beam and add range noise.

    Exactly n_beams normal draws are consumed in beam order whether or not
    a beam returns, so the stream stays aligned across configs.
    """
    if not world.contains(pose.x, pose.y):
        raise ValueError("robot pose lies outside world bounds")
    angles = cfg.beam_angles()
    true_r = kernels.raycast_segments(
        pose.x, pose.y, pose.theta + angles, world.segments, cfg.max_range
    )
    noise = rng.standard_normal(cfg.n_beams)
    hit = true_r >= 0
    noisy = np.clip(true_r + cfg.sigma_range * noise, cfg.min_range, cfg.max_range)
    ranges = np.where(hit, noisy, cfg.no_return)
    return LidarScan(stamp=stamp, angles=angles, ranges=ranges)


def simulate_imu(
    true_w: float,
    cfg: ImuConfig,
    dt: float,
    rng: np.random.Generator,
    bias: float = 0.0,
    stamp: float = 0.0,
) -> ImuSample:
    """One gyro sample: truth + bias + white noise, then walk the bias.

    The returned bias_state is the walked bias to carry into the next call.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    gyro = true_w + bias + cfg.sigma_gyro * rng.standard_normal()
    new_bias = bias + cfg.sigma_bias_walk * math.sqrt(dt) * rng.standard_normal()
    return ImuSample(stamp=stamp, gyro_z=gyro, bias_state=new_bias)


class Simulator:
    """Externally stepped fixed-dt simulator emitting log records.

    Per step the emission order is cmd, imu, odom, [scan], gt; the scan
    appears every ``scan_every``-th step. All randomness comes from
    per-sensor Philox streams derived from the master seed.
    """

    def __init__(
        self,
        world: WorldModel,
        params: RobotParams = RobotParams(),
        lidar: LidarConfig = LidarConfig(),
        imu: ImuConfig = ImuConfig(),
        odom: OdomNoise = OdomNoise(),
        dt: float = SIM_DT,
        scan_every: int = SCAN_EVERY,
        seed: int = 0,
    ):
        if dt <= 0 or scan_every < 1:
            raise ValueError("dt must be positive and scan_every >= 1")
        clearance = world.clearance(world.spawn.x, world.spawn.y)
        if clearance < params.body_radius:
            raise ValueError(
                f"spawn clearance {clearance:.3f} m is below body radius {params.body_radius} m"
            )
        self.world = world
        self.params = params
        self.lidar = lidar
        self.imu = imu
        self.odom = odom
        self.dt = float(dt)
        self.scan_every = int(scan_every)
        self.seed = int(seed)
        self.state = SimState(0.0, world.spawn, Twist2(), False, self.seed)
        self._rng_lidar = rngmod.stream(self.seed, "lidar")
        self._rng_imu = rngmod.stream(self.seed, "imu")
        self._rng_odom = rngmod.stream(self.seed, "odom")
        self._bias = 0.0
        self._step_index = 0

    def _feasible(self, pose: Pose2) -> bool:
        return (
            self.world.contains(pose.x, pose.y)
            and self.world.clearance(pose.x, pose.y) >= self.params.body_radius
        )

    def _advance(self, pose: Pose2, cmd: Twist2) -> tuple[Pose2, float, bool]:
        """Move for one dt, stopping at wall contact.

        Returns (new pose, executed fraction of the step, collided flag).
        The contact point is found by bisection on the step fraction, so
        the standoff from the wall equals the body radius to ~1e-12.
        """
        target = step_exact(pose, cmd, self.dt)
        if self._feasible(target):
            return target, 1.0, False
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            probe = step_exact(pose, cmd, mid * self.dt)
            if self._feasible(probe):
                lo = mid
            else:
                hi = mid
        new_pose = step_exact(pose, cmd, lo * self.dt) if lo > 0.0 else pose
        return new_pose, lo, True

    def step(self, cmd: Twist2) -> list[dict]:
        """Advance one fixed step under ``cmd`` and return emitted records."""
        p = self.params
        v = float(np.clip(cmd.v, -p.max_v, p.max_v))
        w = float(np.clip(cmd.w, -p.max_w, p.max_w))
        executed = Twist2(v, w)
        new_pose, alpha, collided = self._advance(self.state.true_pose, executed)
        v_exec, w_exec = alpha * v, alpha * w
        self._step_index += 1
        t = self._step_index * self.dt
        self.state = SimState(t, new_pose, executed, collided, self.seed)

        records: list[dict] = [{"t": t, "type": "cmd", "v": cmd.v, "w": cmd.w}]
        imu_sample = simulate_imu(w_exec, self.imu, self.dt, self._rng_imu, self._bias, stamp=t)
        self._bias = imu_sample.bias_state
        records.append({"t": t, "type": "imu", "gyro_z": imu_sample.gyro_z})
        odom_noise = self._rng_odom.standard_normal(2)
        records.append(
            {
                "t": t,
                "type": "odom",
                "v": v_exec + self.odom.sigma_v * odom_noise[0],
                "w": w_exec + self.odom.sigma_w * odom_noise[1],
            }
        )
        if self._step_index % self.scan_every == 0:
            scan = simulate_lidar(self.world, new_pose, self.lidar, self._rng_lidar, stamp=t)
            records.append(
                {
                    "t": t,
                    "type": "scan",
                    "angle_min": float(scan.angles[0]),
                    "angle_inc": float(scan.angles[1] - scan.angles[0]),
                    "n": scan.n_beams,
                    "ranges": [float(r) for r in scan.ranges],
                }
            )
        records.append(
            {"t": t, "type": "gt", "x": new_pose.x, "y": new_pose.y, "theta": new_pose.theta}
        )
        return records

    def snapshot(self) -> SimState:
        return replace(self.state)
