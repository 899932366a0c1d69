"""Occupancy octree codec.

Leaves are the cells of the global grid of pitch ``resolution``; leaf g
(integer per axis) spans [g, g + 1) * resolution and decodes to
(g + 0.5) * resolution. The root cube's min corner is the lowest occupied leaf
corner and its edge is padded to ``resolution * 2**depth`` so every leaf sits
at the same depth. Each non-empty internal node is one byte whose bit i says
whether octant i is occupied, octant index = 4*(x >= mid) + 2*(y >= mid) +
(z >= mid). Bytes are written in breadth-first order, children visited in
octant order. Decoding emits the centre of every occupied leaf.

Container::

    magic b"LPOT" | version u8 | flags u8 (bit 0: payload deflated)
    6 x f64 bbox (min xyz, max xyz of the padded cube) | f64 resolution
    payload
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..cloud import PointCloud
from . import deflate

MAGIC = b"LPOT"
VERSION = 1
MAX_DEPTH = 21  # 3 * 21 bits fit in a uint64 Morton code
_HEAD = struct.Struct("<4sBB6dd")


class OctreeError(ValueError):
    pass


class Profile(enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @classmethod
    def parse(cls, name) -> "Profile":
        if isinstance(name, cls):
            return name
        key = str(name).lower()
        return {"low": cls.LOW, "med": cls.MEDIUM, "medium": cls.MEDIUM, "high": cls.HIGH}[key]


PROFILE_RESOLUTIONS = {Profile.LOW: 0.01, Profile.MEDIUM: 0.005, Profile.HIGH: 0.001}


def profile_resolution(profile) -> float:
    return PROFILE_RESOLUTIONS[Profile.parse(profile)]


def _spread(v: np.ndarray) -> np.ndarray:
    """Insert two zero bits between the low 21 bits of v."""
    v = v.astype(np.uint64) & np.uint64(0x1FFFFF)
    v = (v | (v << np.uint64(32))) & np.uint64(0x1F00000000FFFF)
    v = (v | (v << np.uint64(16))) & np.uint64(0x1F0000FF0000FF)
    v = (v | (v << np.uint64(8))) & np.uint64(0x100F00F00F00F00F)
    v = (v | (v << np.uint64(4))) & np.uint64(0x10C30C30C30C30C3)
    v = (v | (v << np.uint64(2))) & np.uint64(0x1249249249249249)
    return v


def _compact(v: np.ndarray) -> np.ndarray:
    v = v & np.uint64(0x1249249249249249)
    v = (v ^ (v >> np.uint64(2))) & np.uint64(0x10C30C30C30C30C3)
    v = (v ^ (v >> np.uint64(4))) & np.uint64(0x100F00F00F00F00F)
    v = (v ^ (v >> np.uint64(8))) & np.uint64(0x1F0000FF0000FF)
    v = (v ^ (v >> np.uint64(16))) & np.uint64(0x1F00000000FFFF)
    v = (v ^ (v >> np.uint64(32))) & np.uint64(0x1FFFFF)
    return v


def morton_encode(ijk: np.ndarray) -> np.ndarray:
    ijk = np.asarray(ijk)
    return (_spread(ijk[:, 0]) << np.uint64(2)) | (_spread(ijk[:, 1]) << np.uint64(1)) | _spread(ijk[:, 2])


def morton_decode(codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.uint64)
    return np.stack([_compact(codes >> np.uint64(2)), _compact(codes >> np.uint64(1)), _compact(codes)], axis=1).astype(
        np.int64
    )


@dataclass
class Octree:
    origin: np.ndarray  # min corner of the root cube
    resolution: float  # leaf edge
    depth: int
    leaves: np.ndarray  # sorted unique Morton codes of occupied leaves

    @property
    def edge(self) -> float:
        return self.resolution * (1 << self.depth)


@dataclass
class OctreeCode:
    origin: np.ndarray
    resolution: float
    depth: int
    occupancy: bytes
    deflated: bool = False

    @property
    def bbox(self):
        edge = self.resolution * (1 << self.depth)
        return np.concatenate([self.origin, self.origin + edge])

    def to_bytes(self) -> bytes:
        payload = deflate.compress(self.occupancy) if self.deflated else self.occupancy
        return _HEAD.pack(MAGIC, VERSION, 1 if self.deflated else 0, *self.bbox.tolist(), self.resolution) + payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "OctreeCode":
        if len(data) < _HEAD.size:
            raise OctreeError("octree blob shorter than its header")
        magic, version, flags, *rest = _HEAD.unpack_from(data)
        if magic != MAGIC:
            raise OctreeError(f"bad magic {magic!r}")
        if version != VERSION:
            raise OctreeError(f"unsupported octree container version {version}")
        bbox, res = np.array(rest[:6]), rest[6]
        if not res > 0:
            raise OctreeError("resolution must be positive")
        ratio = (bbox[3] - bbox[0]) / res
        depth = int(round(math.log2(ratio))) if ratio > 0.5 else -1
        if depth < 0 or depth > MAX_DEPTH:
            raise OctreeError("bounding box edge is not a power-of-two multiple of the resolution")
        payload = data[_HEAD.size:]
        if flags & 1:
            try:
                payload = deflate.decompress(payload)
            except deflate.DeflateError as exc:
                raise OctreeError(f"corrupt deflated occupancy stream: {exc}") from None
        return cls(bbox[:3].copy(), res, depth, payload, bool(flags & 1))


def _two_diff(a, b):
    """a - b as an unevaluated sum hi + lo, exactly (Knuth's TwoSum)."""
    hi = a - b
    bb = hi - a
    lo = (a - (hi - bb)) - (b + bb)
    return hi, lo


def _exceeds(hi, lo, limit):
    """Exact test of hi + lo > limit for a TwoSum pair (|lo| is below half an ulp of hi)."""
    return (hi > limit) | ((hi == limit) & (lo > 0))


def _leaf_centres(g: np.ndarray, res: float) -> np.ndarray:
    return (g + 0.5) * res


def _assign(pts: np.ndarray, res: float) -> np.ndarray:
    """Global leaf index of every point, checked exactly against the decoded centres.

    Starting from floor(p / res), each axis keeps the first of g, g - 1, g + 1
    whose float centre is within res / 2 of the coordinate. If rounding puts
    every candidate just outside (a coordinate on a leaf face), the leaf that
    holds it in exact arithmetic is taken.
    """
    half = 0.5 * res
    best = np.floor(pts / res)
    hi, lo = _two_diff(_leaf_centres(best, res), pts)
    found = ~(_exceeds(hi, lo, half) | _exceeds(-hi, -lo, half))
    if not found.all():
        i, j = np.nonzero(~found)
        p = pts[i, j]
        for off in (-1.0, 1.0):
            g = best[i, j] + off
            hi, lo = _two_diff(_leaf_centres(g, res), p)
            ok = ~(_exceeds(hi, lo, half) | _exceeds(-hi, -lo, half)) & ~found[i, j]
            best[i[ok], j[ok]] = g[ok]
            found[i[ok], j[ok]] = True
    for i, j in zip(*np.nonzero(~found)):
        best[i, j] = math.floor(Fraction(pts[i, j]) / Fraction(res))
    return best.astype(np.int64)


def build(cloud: PointCloud, resolution: float) -> Octree:
    """Occupancy of the leaves of edge ``resolution`` that hold at least one point.

    Leaves come from the global grid of pitch ``resolution`` and the root's
    min corner is the lowest occupied leaf corner, so decoding and rebuilding
    reproduces the same tree.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    if len(pts) == 0:
        raise OctreeError("cannot build an octree from an empty cloud")
    if not resolution > 0:
        raise OctreeError("resolution must be positive")
    res = float(resolution)
    g = _assign(pts, res)
    k = g.min(axis=0)
    ijk = g - k
    depth = int(ijk.max()).bit_length()
    if depth > MAX_DEPTH:
        raise OctreeError(f"depth {depth} exceeds {MAX_DEPTH}; use a coarser resolution")
    leaves = np.unique(morton_encode(ijk))
    return Octree(k * res, res, depth, leaves)


def serialize(tree: Octree, deflated: bool = False) -> OctreeCode:
    levels = []
    codes = tree.leaves
    for _ in range(tree.depth):
        parents = codes >> np.uint64(3)
        starts = np.flatnonzero(np.r_[True, parents[1:] != parents[:-1]])
        bits = np.left_shift(np.uint8(1), (codes & np.uint64(7)).astype(np.uint8))
        levels.append(np.bitwise_or.reduceat(bits, starts).astype(np.uint8))
        codes = parents[starts]
    stream = b"".join(level.tobytes() for level in reversed(levels))
    return OctreeCode(np.asarray(tree.origin, dtype=np.float64), tree.resolution, tree.depth, stream, deflated)


def decode(code: OctreeCode) -> PointCloud:
    stream = np.frombuffer(code.occupancy, dtype=np.uint8)
    nodes = np.zeros(1, dtype=np.uint64)
    pos = 0
    for level in range(code.depth):
        n = len(nodes)
        if pos + n > len(stream):
            raise OctreeError(f"occupancy stream too short at level {level}: need {pos + n} bytes, have {len(stream)}")
        occ = stream[pos: pos + n]
        if np.any(occ == 0):
            raise OctreeError(f"zero occupancy byte at level {level}")
        bits = np.unpackbits(occ[:, None], axis=1, bitorder="little").astype(bool)
        nodes = ((nodes[:, None] << np.uint64(3)) | np.arange(8, dtype=np.uint64))[bits]
        pos += n
    if pos != len(stream):
        raise OctreeError(f"occupancy stream has {len(stream) - pos} trailing bytes")
    ijk = morton_decode(nodes)
    k = np.round(code.origin / code.resolution)
    if np.array_equal(k * code.resolution, code.origin):
        centres = _leaf_centres(k + ijk, code.resolution)
    else:  # origin off the leaf grid (a hand-made code)
        centres = code.origin + (ijk + 0.5) * code.resolution
    return PointCloud(centres)


def voxel_grid(cloud: PointCloud, voxel_size: float) -> PointCloud:
    """Replace the points of each occupied voxel with their centroid."""
    pts = cloud.points
    if len(pts) == 0:
        return PointCloud(pts)
    ijk = np.floor((pts - pts.min(axis=0)) / voxel_size).astype(np.int64)
    _, inverse, counts = np.unique(ijk, axis=0, return_inverse=True, return_counts=True)
    sums = np.zeros((len(counts), 3))
    np.add.at(sums, inverse.ravel(), pts)
    return PointCloud(sums / counts[:, None], frame_id=cloud.frame_id, raw_size_bytes=cloud.raw_size_bytes)


def encode_cloud(cloud: PointCloud, resolution: float, deflated: bool = False) -> bytes:
    return serialize(build(cloud, resolution), deflated).to_bytes()


def decode_cloud(data: bytes) -> PointCloud:
    return decode(OctreeCode.from_bytes(data))
