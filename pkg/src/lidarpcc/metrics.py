"""Compression rate, bytes per point, point-to-plane PSNR and timing."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud

DEFAULT_K = 8
RANK_TOL = 1e-12  # second singular value below this fraction of the first => rank < 2

CSV_HEADER = ("codec", "frame", "points", "raw_bytes", "comp_bytes", "rate", "bpp", "psnr_db", "enc_s", "dec_s")


def compression_rate(compressed_bytes, raw_bytes) -> float:
    """1 - compressed/raw. Negative when the codec expanded the data."""
    if raw_bytes <= 0:
        raise ValueError("raw size must be positive")
    return 1.0 - compressed_bytes / raw_bytes


def bpp(compressed_bytes, point_count) -> float:
    if point_count <= 0:
        raise ValueError("point count must be positive")
    return compressed_bytes / point_count


def _points(cloud) -> np.ndarray:
    return cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64).reshape(-1, 3)


def _sqdist(a, b):
    d = a - b
    return (d * d).sum(axis=-1)


class NeighborIndex:
    """Exact nearest-neighbour queries over a fixed point set.

    Among equidistant candidates the lowest point index wins. Distances are
    compared as squared Euclidean norms computed in float64.
    """

    def __init__(self, cloud):
        self.points = _points(cloud)
        if len(self.points) == 0:
            raise ValueError("cannot index an empty cloud")
        self._tree = cKDTree(self.points)

    def __len__(self):
        return len(self.points)

    def knn(self, queries, k: int, margin: int = 4):
        """k nearest neighbours per query, ordered by (distance, index).

        Returns (squared distances, indices), each of shape (m, k).
        """
        q = np.asarray(queries, dtype=np.float64).reshape(-1, 3)
        n = len(self.points)
        k = min(k, n)
        kc = min(k + margin, n)
        _, cand = self._tree.query(q, k=kc)
        cand = cand.reshape(len(q), kc)
        d2 = _sqdist(self.points[cand], q[:, None, :])
        order = np.lexsort((cand, d2), axis=1)
        cand = np.take_along_axis(cand, order, 1)
        d2 = np.take_along_axis(d2, order, 1)
        if kc < n:
            # a tie straddling the candidate boundary may hide a lower index
            unsure = np.flatnonzero(d2[:, k - 1] >= d2[:, kc - 1])
            for row in unsure:
                radius = math.sqrt(d2[row, k - 1]) * (1 + 1e-9) + 1e-300
                idx = np.asarray(self._tree.query_ball_point(q[row], radius), dtype=np.int64)
                dd = _sqdist(self.points[idx], q[row])
                o = np.lexsort((idx, dd))[:kc]
                cand[row, : len(o)] = idx[o]
                d2[row, : len(o)] = dd[o]
        return d2[:, :k], cand[:, :k]

    def query(self, queries):
        """Nearest neighbour per query: (squared distance, index)."""
        d2, idx = self.knn(queries, 1)
        return d2[:, 0], idx[:, 0]

    def nearest_other_sq(self) -> np.ndarray:
        """Squared distance from each indexed point to its nearest other point."""
        d2, _ = self.knn(self.points, 2)
        return d2[:, 1]


def _fit_normals(neigh: np.ndarray, centres: np.ndarray):
    """Least-squares plane normals for stacked neighbourhoods (m, k, 3)."""
    centred = neigh - neigh.mean(axis=1, keepdims=True)
    _, s, vh = np.linalg.svd(centred, full_matrices=False)
    normals = vh[:, -1, :].copy()
    degenerate = (s[:, 1] <= RANK_TOL * s[:, 0]) | (s[:, 0] == 0)
    if s.shape[1] < 3:
        degenerate[:] = True
    flip = (normals * centres).sum(axis=1) > 0
    normals[flip] *= -1
    return normals, degenerate


@dataclass
class NormalEstimate:
    normal: np.ndarray
    degenerate: bool


def estimate_normal(cloud, at, k: int = DEFAULT_K) -> NormalEstimate:
    """Unit normal of the plane through the k nearest neighbours of ``at``,
    oriented towards the sensor origin. Rank-deficient neighbourhoods are
    flagged ``degenerate``.
    """
    pts = _points(cloud)
    if len(pts) < 3:
        raise ValueError("normal estimation needs at least 3 points")
    if k < 3:
        raise ValueError("k must be >= 3")
    index = NeighborIndex(pts)
    _, idx = index.knn(np.asarray(at, dtype=np.float64)[None], k)
    normals, degenerate = _fit_normals(pts[idx], np.asarray(at, dtype=np.float64)[None])
    return NormalEstimate(normals[0], bool(degenerate[0]))


@dataclass
class PsnrDetail:
    psnr_db: float
    forward_db: float
    backward_db: float
    mse_forward: float
    mse_backward: float
    peak_forward: float
    peak_backward: float
    degenerate_forward: int
    degenerate_backward: int

    @property
    def degenerate(self) -> bool:
        return bool(self.degenerate_forward or self.degenerate_backward)


def _one_way_mse(src: np.ndarray, ref_index: NeighborIndex, k: int):
    """Mean squared point-to-plane error of ``src`` against the indexed cloud."""
    ref = ref_index.points
    _, nn = ref_index.query(src)
    diff = src - ref[nn]
    used, inverse = np.unique(nn, return_inverse=True)
    if len(ref) >= 3:
        _, neigh = ref_index.knn(ref[used], k)
        normals, degenerate = _fit_normals(ref[neigh], ref[used])
    else:
        normals = np.zeros((len(used), 3))
        degenerate = np.ones(len(used), dtype=bool)
    n_q = normals[inverse.ravel()]
    deg = degenerate[inverse.ravel()]
    err = (diff * n_q).sum(axis=1) ** 2
    err[deg] = (diff[deg] ** 2).sum(axis=1)
    return float(err.mean()), int(deg.sum())


def _psnr(peak: float, mse: float) -> float:
    if mse == 0:
        return math.inf
    return 10 * math.log10(peak * peak / mse)


def psnr_detail(original, reconstructed, k: int = DEFAULT_K) -> PsnrDetail:
    p, q = _points(original), _points(reconstructed)
    if len(p) == 0 or len(q) == 0:
        raise ValueError("both clouds must be non-empty")
    if len(p) < 2 or len(q) < 2:
        raise ValueError("peak value is undefined for a single-point cloud")
    ip, iq = NeighborIndex(p), NeighborIndex(q)
    peak_p = math.sqrt(float(ip.nearest_other_sq().max()))
    peak_q = math.sqrt(float(iq.nearest_other_sq().max()))
    mse_f, deg_f = _one_way_mse(p, iq, k)
    mse_b, deg_b = _one_way_mse(q, ip, k)
    fwd, bwd = _psnr(peak_p, mse_f), _psnr(peak_q, mse_b)
    return PsnrDetail(min(fwd, bwd), fwd, bwd, mse_f, mse_b, peak_p, peak_q, deg_f, deg_b)


def psnr_point_to_plane(original, reconstructed, k: int = DEFAULT_K) -> float:
    """Symmetric point-to-plane PSNR in dB (``math.inf`` for identical clouds).

    Each direction uses the maximum nearest-neighbour spacing of its own
    source cloud as the peak; the result is the smaller of the two.
    """
    return psnr_detail(original, reconstructed, k).psnr_db


def timed(op, *args, **kwargs):
    """Run ``op`` once; returns (result, wall seconds on a monotonic clock)."""
    start = time.perf_counter()
    result = op(*args, **kwargs)
    return result, time.perf_counter() - start


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


@dataclass
class MetricsReport:
    codec: str
    frame: int
    points: int
    raw_bytes: int
    comp_bytes: float
    compression_rate: float
    bpp: float
    psnr_db: Optional[float]
    encode_seconds: Optional[float]  # None when an external codec reports no timing
    decode_seconds: Optional[float]

    def row(self) -> list:
        return [format_value(v) for v in (self.codec, self.frame, self.points, self.raw_bytes, self.comp_bytes,
                                  self.compression_rate, self.bpp, self.psnr_db, self.encode_seconds,
                                  self.decode_seconds)]

    @classmethod
    def from_row(cls, row) -> "MetricsReport":
        def num(s):
            return None if s == "" else float(s)

        codec, frame, points, raw, comp, rate, b, psnr, enc, dec = row
        return cls(codec, int(frame), int(points), int(raw), float(comp), float(rate), float(b), num(psnr),
                   num(enc), num(dec))
