"""Point cloud containers, spherical coordinates and the n-bit quantizer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

BIT_DEPTHS = (8, 16)


class Point3(NamedTuple):
    x: float
    y: float
    z: float


class SphericalPoint(NamedTuple):
    """rho in meters, theta (elevation) and phi (azimuth) in radians."""

    rho: float
    theta: float
    phi: float


@dataclass(frozen=True)
class QuantizationMeta:
    min_value: float
    max_value: float
    bit_depth: int

    def __post_init__(self):
        if self.bit_depth not in BIT_DEPTHS:
            raise ValueError(f"bit_depth must be one of {BIT_DEPTHS}, got {self.bit_depth}")
        if not self.max_value >= self.min_value:
            raise ValueError("max_value must be >= min_value")

    @property
    def levels(self) -> int:
        return (1 << self.bit_depth) - 1

    @property
    def step(self) -> float:
        return (self.max_value - self.min_value) / self.levels


@dataclass
class PointCloud:
    """An (n, 3) float64 array of points plus optional sensor provenance.

    ``laser_id`` and ``azimuth_bin`` are either both None or both integer
    arrays of length n. ``azimuth_bin`` holds the sensor azimuth in its native
    0.01 degree ticks. ``raw_size_bytes`` is the size of the raw capture the
    frame was decoded from.
    """

    points: np.ndarray
    laser_id: Optional[np.ndarray] = None
    azimuth_bin: Optional[np.ndarray] = None
    frame_id: int = 0
    raw_size_bytes: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        self.points = pts
        if (self.laser_id is None) != (self.azimuth_bin is None):
            raise ValueError("laser_id and azimuth_bin must be given together")
        if self.laser_id is not None:
            self.laser_id = np.asarray(self.laser_id, dtype=np.int64)
            self.azimuth_bin = np.asarray(self.azimuth_bin, dtype=np.int64)
            if len(self.laser_id) != len(pts) or len(self.azimuth_bin) != len(pts):
                raise ValueError("provenance length must match the number of points")
        if self.raw_size_bytes < 0:
            raise ValueError("raw_size_bytes must be >= 0")

    def __len__(self):
        return len(self.points)

    @property
    def has_provenance(self) -> bool:
        return self.laser_id is not None


def to_spherical(p) -> SphericalPoint:
    x, y, z = (float(c) for c in p)
    rho, theta, phi = cartesian_to_spherical(np.array([[x, y, z]]))[0]
    return SphericalPoint(float(rho), float(theta), float(phi))


def to_cartesian(s) -> Point3:
    rho, theta, phi = (float(c) for c in s)
    x, y, z = spherical_to_cartesian(np.array([[rho, theta, phi]]))[0]
    return Point3(float(x), float(y), float(z))


def cartesian_to_spherical(points: np.ndarray) -> np.ndarray:
    """Vectorised (x, y, z) -> (rho, theta, phi). The origin maps to zeros."""
    pts = np.asarray(points, dtype=np.float64)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    horiz = np.hypot(x, y)
    rho = np.sqrt(x * x + y * y + z * z)
    theta = np.arctan2(z, horiz)
    phi = np.arctan2(y, x)
    # arctan2 returns -pi for (-0.0 y, negative x); keep phi in (-pi, pi]
    phi = np.where(phi == -math.pi, math.pi, phi)
    return np.stack([rho, theta, phi], axis=1)


def spherical_to_cartesian(sph: np.ndarray) -> np.ndarray:
    s = np.asarray(sph, dtype=np.float64)
    rho, theta, phi = s[:, 0], s[:, 1], s[:, 2]
    ct = np.cos(theta)
    return np.stack([rho * ct * np.cos(phi), rho * ct * np.sin(phi), rho * np.sin(theta)], axis=1)


def quantize(values, bit_depth: int = 16):
    """Map floats onto [0, 2**n - 1] using the frame's own min/max.

    Rounds half up. A degenerate range (all values equal) quantizes to 0.
    Returns ``(ints, QuantizationMeta)``.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("nothing to quantize: empty input")
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    lo, hi = float(v.min()), float(v.max())
    meta = QuantizationMeta(lo, hi, bit_depth)
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    if hi == lo:
        return np.zeros(v.size, dtype=dtype), meta
    scaled = (v - lo) / (hi - lo) * meta.levels
    ints = np.floor(scaled + 0.5)
    np.clip(ints, 0, meta.levels, out=ints)
    return ints.astype(dtype), meta


def dequantize(ints, meta: QuantizationMeta) -> np.ndarray:
    u = np.asarray(ints).ravel()
    if u.size and (u.min() < 0 or u.max() > meta.levels):
        raise ValueError(f"quantized value exceeds 2**{meta.bit_depth} - 1")
    if meta.max_value == meta.min_value:
        return np.full(u.size, meta.min_value, dtype=np.float64)
    return meta.min_value + u.astype(np.float64) / meta.levels * (meta.max_value - meta.min_value)
