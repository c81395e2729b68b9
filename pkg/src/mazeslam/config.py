"""Run configuration: one JSON document collecting every tunable.

Unknown keys are rejected (a typo must fail loudly, not silently fall
back to a default), and every run embeds a copy of its effective config
in the output directory so results stay interpretable.
"""

from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass
from pathlib import Path

from mazeslam.errors import InputFileError
from mazeslam.fusion import FusionParams
from mazeslam.mcl import MclConfig
from mazeslam.nav import NavConfig
from mazeslam.simulator import ImuConfig, LidarConfig, OdomNoise, RobotParams
from mazeslam.slam import SlamConfig

SLAM_MODES = ("gt-odom", "with_encoders", "encoderless")


@dataclass(frozen=True)
class SimSection:
    dt: float = 0.05
    scan_every: int = 2

    def __post_init__(self):
        if self.dt <= 0 or self.scan_every < 1:
            raise ValueError("dt must be positive and scan_every >= 1")


@dataclass(frozen=True)
class SlamSection(SlamConfig):
    resolution: float = 0.05  # m per map cell
    map_margin: float = 0.5  # m of grid padding beyond world bounds


@dataclass(frozen=True)
class MclSection(MclConfig):
    init_mode: str = "gaussian"
    init_sigmas: tuple[float, float, float] = (0.5, 0.5, 0.3)

    def __post_init__(self):
        super().__post_init__()
        if self.init_mode not in ("gaussian", "uniform_free"):
            raise ValueError(f"unknown init_mode {self.init_mode!r}")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 42
    world: str = "bundled:maze8"
    mode: str = "with_encoders"
    sim: SimSection = SimSection()
    robot: RobotParams = RobotParams()
    lidar: LidarConfig = LidarConfig()
    imu: ImuConfig = ImuConfig()
    odom_noise: OdomNoise = OdomNoise()
    fusion: FusionParams = FusionParams()
    slam: SlamSection = SlamSection()
    mcl: MclSection = MclSection()
    nav: NavConfig = NavConfig()

    def __post_init__(self):
        if self.mode not in SLAM_MODES:
            raise ValueError(f"mode must be one of {SLAM_MODES}, got {self.mode!r}")


def _from_dict(cls, data, where: str):
    if not isinstance(data, dict):
        raise InputFileError(f"config section {where} must be an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise InputFileError(f"unknown config key(s) in {where}: {', '.join(unknown)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        hint = hints.get(f.name)
        if dataclasses.is_dataclass(hint):
            kwargs[f.name] = _from_dict(hint, value, f"{where}.{f.name}")
        elif typing.get_origin(hint) is tuple:
            kwargs[f.name] = tuple(value)
        else:
            kwargs[f.name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise InputFileError(f"invalid config in {where}: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    return _from_dict(RunConfig, data, "config")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFileError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(doc)


def config_to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def save_config(cfg: RunConfig, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config_to_dict(cfg), indent=1, sort_keys=False) + "\n")
