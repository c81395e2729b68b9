"""Sensor sample containers shared across the stack."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class LidarScan:
    """One planar range scan in the robot frame.

    ``angles`` are strictly increasing beam directions; ``ranges`` holds
    the measured distance per beam, with any value above the sensor's max
    range (the max_range + 1 sentinel) meaning "no return".
    """

    stamp: float
    angles: np.ndarray
    ranges: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        self.ranges = np.asarray(self.ranges, dtype=float)
        if self.angles.shape != self.ranges.shape:
            raise ValueError("angles and ranges must have identical shape")
        if self.angles.size >= 2 and not np.all(np.diff(self.angles) > 0):
            raise ValueError("beam angles must be strictly increasing")

    def returns_mask(self, max_range: float) -> np.ndarray:
        return self.ranges <= max_range

    @property
    def n_beams(self) -> int:
        return int(self.angles.size)


@dataclass
class ImuSample:
    """Single-axis gyro reading with its hidden random-walk bias state."""

    stamp: float
    gyro_z: float
    bias_state: float = 0.0


@dataclass
class OdomSample:
    """Body-frame twist reported by (noisy) wheel odometry."""

    stamp: float
    v: float
    w: float


@dataclass
class EndpointCache:
    """Robot-frame endpoints of a scan's hit beams, computed once."""

    lx: np.ndarray
    ly: np.ndarray

    @classmethod
    def from_scan(cls, scan: LidarScan, max_range: float) -> "EndpointCache":
        mask = scan.returns_mask(max_range)
        r = scan.ranges[mask]
        a = scan.angles[mask]
        return cls(lx=r * np.cos(a), ly=r * np.sin(a))

    def __len__(self) -> int:
        return int(self.lx.size)
