"""Point cloud <-> range image conversion.

Rows index laser elevation (ascending), columns index azimuth bins centred on
``col * bin_width - pi``. Three layouts are supported:

* CARTESIAN_TRI: one image, channels (x, y, z)
* CARTESIAN_SINGLE: three one-channel images, one per axis
* SPHERICAL: channels (rho, azimuth residual inside the bin); the elevation is
  implied by the row. SPHERICAL_RADIUS keeps rho only and reconstructs the
  azimuth at the bin centre.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .cloud import PointCloud, QuantizationMeta, dequantize, quantize
from .ingest.sensors import SensorModel

log = logging.getLogger(__name__)

RESIDUAL_SNAP = 1e-9  # rad; 0.1 um of arc at 100 m


class Layout(enum.IntEnum):
    CARTESIAN_SINGLE = 0
    CARTESIAN_TRI = 1
    SPHERICAL = 2
    SPHERICAL_RADIUS = 3

    @property
    def channels(self) -> int:
        return {0: 1, 1: 3, 2: 2, 3: 1}[int(self)]

    @classmethod
    def parse(cls, name) -> "Layout":
        if isinstance(name, cls):
            return name
        key = str(name).upper().replace("-", "_")
        return cls[key]


class ProjectionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GridLayout:
    """Row elevations (radians, strictly ascending) and azimuth column count.

    ``laser_to_row`` maps a sensor laser id to its row, when known.
    """

    elevations: np.ndarray
    cols: int
    laser_to_row: Optional[np.ndarray] = None

    def __post_init__(self):
        elev = np.asarray(self.elevations, dtype=np.float64)
        if elev.ndim != 1 or elev.size == 0:
            raise ValueError("elevation table must be a non-empty 1-D array")
        if np.any(np.diff(elev) <= 0):
            raise ValueError("elevations must be strictly ascending")
        if self.cols < 1:
            raise ValueError("cols must be >= 1")
        object.__setattr__(self, "elevations", elev)
        if self.laser_to_row is not None:
            object.__setattr__(self, "laser_to_row", np.asarray(self.laser_to_row, dtype=np.int64))

    @property
    def rows(self) -> int:
        return len(self.elevations)

    @property
    def bin_width(self) -> float:
        return 2 * math.pi / self.cols

    @classmethod
    def from_elevations(cls, elevations_by_laser, cols: int) -> "GridLayout":
        elev = np.asarray(elevations_by_laser, dtype=np.float64)
        order = np.argsort(elev, kind="stable")
        laser_to_row = np.empty(len(elev), dtype=np.int64)
        laser_to_row[order] = np.arange(len(elev))
        return cls(elev[order], cols, laser_to_row)

    @classmethod
    def from_sensor(cls, model=SensorModel.VLP16, rpm: int = 600) -> "GridLayout":
        """Default grid: one column per firing at the given rotation speed (VLP-16 @ 600 rpm -> 16 x 1800)."""
        model = SensorModel.parse(model)
        step = model.firing_step_ticks * rpm / 600.0
        return cls.from_elevations(model.elevations, int(round(36000 / step)))

    def __eq__(self, other):
        return (
            isinstance(other, GridLayout)
            and self.cols == other.cols
            and np.array_equal(self.elevations, other.elevations)
        )

    def assign(self, cloud: PointCloud):
        """Return (row, col, azimuth residual, spherical coords) per point.

        Provenance, when present and the grid knows the laser table, decides
        both the row (laser id) and the column (firing azimuth ticks), so
        sensor frames bin exactly. Otherwise both come from the geometry.
        """
        pts = np.ascontiguousarray(cloud.points, dtype=np.float64)
        if cloud.has_provenance and self.laser_to_row is not None:
            lid = cloud.laser_id
            if lid.size and (lid.min() < 0 or lid.max() >= len(self.laser_to_row)):
                raise ProjectionError("laser id outside the grid's laser table")
            sph, col, residual = _bin_ticks(pts, np.asarray(cloud.azimuth_bin, dtype=np.int64), self.cols)
            return self.laser_to_row[lid], col, residual, sph
        sph, col, residual = _bin(pts, self.cols, RESIDUAL_SNAP)
        return self._nearest_row(sph[:, 1]), col, residual, sph

    def _nearest_row(self, theta: np.ndarray) -> np.ndarray:
        elev = self.elevations
        if len(elev) == 1:
            return np.zeros(len(theta), dtype=np.int64)
        idx = np.clip(np.searchsorted(elev, theta), 1, len(elev) - 1)
        left, right = elev[idx - 1], elev[idx]
        row = np.where(theta - left <= right - theta, idx - 1, idx)
        gaps = np.diff(elev)
        half = np.concatenate([[gaps[0]], np.maximum(gaps[:-1], gaps[1:]), [gaps[-1]]]) / 2
        off = np.abs(theta - elev[row])
        bad = off > half[row] + 1e-12
        if np.any(bad):
            raise ProjectionError(
                f"{int(bad.sum())} points have no provenance and an elevation outside the grid "
                f"(worst {math.degrees(float(off.max())):.3f} deg from a row)"
            )
        return row


@njit(cache=True)
def _bin(points, cols, snap):
    """Spherical coordinates, azimuth column and in-bin residual per point."""
    n = points.shape[0]
    sph = np.empty((n, 3))
    col = np.empty(n, dtype=np.int64)
    residual = np.empty(n)
    w = 2 * math.pi / cols
    for i in range(n):
        x, y, z = points[i, 0], points[i, 1], points[i, 2]
        phi = math.atan2(y, x)
        if phi == -math.pi:
            phi = math.pi
        sph[i, 0] = math.sqrt(x * x + y * y + z * z)
        sph[i, 1] = math.atan2(z, math.hypot(x, y))
        sph[i, 2] = phi
        c = np.int64(math.floor((phi + math.pi) / w + 0.5))
        r = phi - (c * w - math.pi)
        if r >= math.pi:
            r -= 2 * math.pi
        elif r < -math.pi:
            r += 2 * math.pi
        # float round-off on bin-aligned firings; quantizing it would turn a constant channel into noise
        if abs(r) < snap:
            r = 0.0
        col[i] = c % cols
        residual[i] = r
    return sph, col, residual


@njit(cache=True)
def _bin_ticks(points, ticks, cols):
    """Like ``_bin`` but the azimuth comes from sensor firing ticks (0.01 deg,
    clockwise from +y), i.e. phi = 90 deg - azimuth. Elevation is not needed
    and left at 0."""
    n = points.shape[0]
    sph = np.zeros((n, 3))
    col = np.empty(n, dtype=np.int64)
    residual = np.empty(n)
    per_col = 36000.0 / cols
    unit = math.pi / 18000.0
    for i in range(n):
        x, y, z = points[i, 0], points[i, 1], points[i, 2]
        t = (9000 - ticks[i]) % 36000
        if t > 18000:
            t -= 36000
        sph[i, 0] = math.sqrt(x * x + y * y + z * z)
        sph[i, 2] = t * unit
        # half up, not half even: firings on a column edge must all fall the same way
        c = np.int64(math.floor((t + 18000) / per_col + 0.5))
        residual[i] = ((t + 18000) - c * per_col) * unit
        col[i] = c % cols
    return sph, col, residual


@njit(cache=True)
def _nearest_per_cell(cell, rho, ncells):
    """Index of the smallest-rho point per cell (lowest index on ties), -1 if empty."""
    best = np.full(ncells, -1, dtype=np.int64)
    for i in range(cell.shape[0]):
        b = best[cell[i]]
        if b < 0 or rho[i] < rho[b]:
            best[cell[i]] = i
    return best


@dataclass(eq=False)
class RangeImage:
    pixels: np.ndarray  # (channels, rows, cols) uint8 or uint16
    metas: tuple
    validity: np.ndarray  # (rows, cols) bool
    layout: Layout
    grid: GridLayout
    axis: int = 0  # which coordinate a CARTESIAN_SINGLE image carries
    collisions: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.layout = Layout(self.layout)
        if self.pixels.ndim != 3:
            raise ValueError("pixels must be (channels, rows, cols)")
        c, r, k = self.pixels.shape
        if (r, k) != (self.grid.rows, self.grid.cols) or self.validity.shape != (r, k):
            raise ValueError("pixel/validity shape does not match the grid")
        if c != self.layout.channels:
            raise ValueError(f"{self.layout.name} needs {self.layout.channels} channels, got {c}")
        if len(self.metas) != c:
            raise ValueError("one QuantizationMeta per channel required")
        if self.pixels.dtype not in (np.uint8, np.uint16):
            raise ValueError("pixels must be uint8 or uint16")
        depths = {m.bit_depth for m in self.metas}
        if depths != {self.bit_depth}:
            raise ValueError("channel metas disagree with the pixel bit depth")
        self.metas = tuple(self.metas)

    @property
    def bit_depth(self) -> int:
        return 8 if self.pixels.dtype == np.uint8 else 16

    @property
    def channels(self) -> int:
        return self.pixels.shape[0]

    @property
    def rows(self) -> int:
        return self.pixels.shape[1]

    @property
    def cols(self) -> int:
        return self.pixels.shape[2]

    def __eq__(self, other):
        return (
            isinstance(other, RangeImage)
            and self.layout == other.layout
            and self.axis == other.axis
            and self.grid == other.grid
            and self.metas == other.metas
            and self.pixels.dtype == other.pixels.dtype
            and np.array_equal(self.pixels, other.pixels)
            and np.array_equal(self.validity, other.validity)
        )


def _quantize_channel(values: np.ndarray, bit_depth: int):
    if values.size == 0:
        return values.astype(np.uint16 if bit_depth == 16 else np.uint8), QuantizationMeta(0.0, 0.0, bit_depth)
    return quantize(values, bit_depth)


def project(cloud: PointCloud, grid: GridLayout, mode=Layout.SPHERICAL, bit_depth: int = 16):
    """Project a cloud onto ``grid``. Returns a RangeImage, or a list of three
    for CARTESIAN_SINGLE. When several points land in a cell the nearest one
    is kept; the number dropped is stored in ``RangeImage.collisions``.
    """
    mode = Layout.parse(mode)
    if bit_depth not in (8, 16):
        raise ValueError("bit_depth must be 8 or 16")
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    rows, cols = grid.rows, grid.cols
    row, col, residual, sph = grid.assign(cloud)
    best = _nearest_per_cell(row * cols + col, sph[:, 0], rows * cols)
    filled = best >= 0
    keep = best[filled]
    cells = np.flatnonzero(filled)
    collisions = len(cloud) - len(keep)
    if collisions:
        log.debug("projection dropped %d colliding returns", collisions)
    validity = filled.reshape(rows, cols)

    if mode in (Layout.CARTESIAN_TRI, Layout.CARTESIAN_SINGLE):
        channel_values = [cloud.points[keep, a] for a in range(3)]
    elif mode == Layout.SPHERICAL:
        channel_values = [sph[keep, 0], residual[keep]]
    else:
        channel_values = [sph[keep, 0]]

    planes, metas = [], []
    for values in channel_values:
        q, meta = _quantize_channel(values, bit_depth)
        plane = np.zeros(rows * cols, dtype=dtype)
        plane[cells] = q
        planes.append(plane.reshape(rows, cols))
        metas.append(meta)

    if mode == Layout.CARTESIAN_SINGLE:
        return [
            RangeImage(planes[a][None], (metas[a],), validity.copy(), mode, grid, axis=a, collisions=collisions)
            for a in range(3)
        ]
    return RangeImage(np.stack(planes), tuple(metas), validity, mode, grid, collisions=collisions)


def unproject(images, grid: Optional[GridLayout] = None) -> PointCloud:
    """Rebuild a cloud with one point per valid cell, in row-major cell order."""
    if isinstance(images, RangeImage):
        images = [images]
    images = list(images)
    if not images:
        raise ProjectionError("no images to unproject")
    first = images[0]
    grid = grid or first.grid
    for img in images:
        if len(img.metas) != img.channels:
            raise ProjectionError("meta/channel count mismatch")
        if img.grid != grid:
            raise ProjectionError("image grid does not match the layout")
    rows_idx, cols_idx = np.nonzero(first.validity)

    def channel(img, c):
        return dequantize(img.pixels[c][rows_idx, cols_idx], img.metas[c])

    layout = first.layout
    if layout == Layout.CARTESIAN_SINGLE:
        if len(images) != 3 or sorted(i.axis for i in images) != [0, 1, 2]:
            raise ProjectionError("CARTESIAN_SINGLE needs three images, one per axis")
        if any(not np.array_equal(i.validity, first.validity) for i in images):
            raise ProjectionError("CARTESIAN_SINGLE images disagree on validity")
        by_axis = {i.axis: i for i in images}
        pts = np.stack([channel(by_axis[a], 0) for a in range(3)], axis=1)
    elif layout == Layout.CARTESIAN_TRI:
        pts = np.stack([channel(first, c) for c in range(3)], axis=1)
    else:
        rho_meta = first.metas[0]
        res_meta = first.metas[1] if layout == Layout.SPHERICAL else QuantizationMeta(0.0, 0.0, rho_meta.bit_depth)
        res_plane = first.pixels[1] if layout == Layout.SPHERICAL else first.pixels[0]
        centres = np.arange(grid.cols) * grid.bin_width - math.pi
        pts = _spherical_points(first.validity, first.pixels[0], res_plane,
                                rho_meta.min_value, rho_meta.max_value, res_meta.min_value, res_meta.max_value,
                                float(rho_meta.levels), np.cos(grid.elevations), np.sin(grid.elevations),
                                np.cos(centres), np.sin(centres), grid.bin_width)
    return PointCloud(pts.reshape(-1, 3))


@njit(cache=True)
def _dequant(u, lo, hi, levels):
    # same arithmetic as cloud.dequantize
    if hi == lo:
        return lo
    return lo + u / levels * (hi - lo)


@njit(cache=True)
def _spherical_points(validity, q_rho, q_res, rho_lo, rho_hi, res_lo, res_hi, levels, cos_t, sin_t, cos_c, sin_c,
                      w):
    """Points for the valid cells in row-major order; bin-centred cells use the column trig tables."""
    rows, cols = validity.shape
    n = 0
    for r in range(rows):
        for c in range(cols):
            if validity[r, c]:
                n += 1
    out = np.empty((n, 3))
    i = 0
    for r in range(rows):
        for c in range(cols):
            if not validity[r, c]:
                continue
            rho = _dequant(np.float64(q_rho[r, c]), rho_lo, rho_hi, levels)
            res = _dequant(np.float64(q_res[r, c]), res_lo, res_hi, levels)
            if res == 0.0:
                cp, sp = cos_c[c], sin_c[c]
            else:
                phi = c * w - math.pi + res
                cp, sp = math.cos(phi), math.sin(phi)
            rc = rho * cos_t[r]
            out[i, 0] = rc * cp
            out[i, 1] = rc * sp
            out[i, 2] = rho * sin_t[r]
            i += 1
    return out


def export_png(image: RangeImage, prefix) -> list:
    """Write each channel as a 16-bit grayscale PNG for visual inspection."""
    from PIL import Image

    paths = []
    for c in range(image.channels):
        plane = image.pixels[c].astype(np.uint16)
        if image.bit_depth == 8:
            plane = plane << 8
        path = f"{prefix}_ch{c}.png"
        Image.fromarray(plane).save(path)
        paths.append(path)
    return paths
