"""Planar rigid-body geometry: poses, twists, angle arithmetic.

Conventions used everywhere in this package: x right, y up, theta
counterclockwise from +x, all quantities SI (meters, radians, seconds).
Headings are normalized to the half-open interval (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(a):
    """Normalize an angle (or array of angles) to (-pi, pi].

    The result is congruent to ``a`` modulo 2*pi. Exactly -pi maps to +pi
    so every heading has a single canonical representative.
    """
    r = np.mod(np.asarray(a, dtype=float) + math.pi, TWO_PI)
    out = np.where(r == 0.0, math.pi, r - math.pi)
    if np.ndim(a) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Pose2:
    """Planar pose (x, y, heading). Heading is wrapped on construction."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    @staticmethod
    def from_array(v) -> "Pose2":
        return Pose2(float(v[0]), float(v[1]), float(v[2]))


@dataclass(frozen=True)
class Twist2:
    """Body-frame velocity command: forward speed v and CCW turn rate w."""

    v: float = 0.0
    w: float = 0.0


def compose(a: Pose2, b: Pose2) -> Pose2:
    """Return a ⊕ b: pose b expressed in a's frame, mapped to the world."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose2(
        a.x + c * b.x - s * b.y,
        a.y + s * b.x + c * b.y,
        a.theta + b.theta,
    )


def inverse(p: Pose2) -> Pose2:
    """Return p⁻¹ such that compose(p, inverse(p)) is the identity."""
    c, s = math.cos(p.theta), math.sin(p.theta)
    return Pose2(-(c * p.x + s * p.y), -(-s * p.x + c * p.y), -p.theta)


def between(a: Pose2, b: Pose2) -> Pose2:
    """Return the relative pose a⁻¹ ⊕ b (b as seen from a's frame)."""
    return compose(inverse(a), b)


def transform_point(p: Pose2, q) -> np.ndarray:
    """Map point(s) ``q`` from p's frame to the world frame.

    ``q`` may be a single (x, y) pair or an (N, 2) array; the rotated and
    translated points come back with the same shape.
    """
    q = np.asarray(q, dtype=float)
    c, s = math.cos(p.theta), math.sin(p.theta)
    x = q[..., 0]
    y = q[..., 1]
    return np.stack([p.x + c * x - s * y, p.y + s * x + c * y], axis=-1)


def check_cov(m, size: int = 3, sym_tol: float = 1e-9, psd_tol: float = -1e-9) -> np.ndarray:
    """Validate a covariance matrix: square, symmetric, PSD within tolerance.

    Returns the matrix as a float ndarray; raises ValueError on violation.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (size, size):
        raise ValueError(f"covariance must be {size}x{size}, got {m.shape}")
    if not np.all(np.abs(m - m.T) <= sym_tol):
        raise ValueError("covariance is not symmetric")
    eigs = np.linalg.eigvalsh(0.5 * (m + m.T))
    if eigs.min() < psd_tol:
        raise ValueError(f"covariance is not PSD (min eigenvalue {eigs.min():.3e})")
    return m
