"""Byte layouts shared by the 2-D codecs.

Blob::

    magic  b"LPCC"          4 bytes
    version                 u8  (= 1)
    codec_id                u8
    header_length           u32 LE
    header                  header_length bytes
    payload                 rest of the blob

Image header (``pack_image_header``)::

    layout u8 | axis u8 | bit_depth u8 | channels u8 | rows u16 | cols u32
    rows x f64 row elevations
    channels x (f64 min, f64 max)
    u32 mask length | validity mask (run lengths, see ``encode_mask``)

All integers little-endian. Codec-specific fields follow the image header.
"""

from __future__ import annotations

import enum
import io
import struct
from dataclasses import dataclass

import numpy as np

from ..cloud import QuantizationMeta
from ..projection import GridLayout, Layout

MAGIC = b"LPCC"
VERSION = 1
_PREFIX = struct.Struct("<4sBBI")


class CodecId(enum.IntEnum):
    DICTIONARY = 1
    PREDICTIVE = 2
    OCTREE = 3
    VIDEO_INTER = 4
    VIDEO_INTRA = 5


class BlobError(ValueError):
    pass


@dataclass(frozen=True)
class CompressedBlob:
    codec_id: CodecId
    header: bytes
    payload: bytes

    def to_bytes(self) -> bytes:
        return _PREFIX.pack(MAGIC, VERSION, int(self.codec_id), len(self.header)) + self.header + self.payload

    def __len__(self):
        return _PREFIX.size + len(self.header) + len(self.payload)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CompressedBlob":
        if len(data) < _PREFIX.size:
            raise BlobError("blob shorter than its fixed prefix")
        magic, version, codec_id, hlen = _PREFIX.unpack_from(data)
        if magic != MAGIC:
            raise BlobError(f"bad magic {magic!r}")
        if version != VERSION:
            raise BlobError(f"unsupported container version {version}")
        try:
            cid = CodecId(codec_id)
        except ValueError:
            raise BlobError(f"unknown codec id {codec_id}") from None
        if _PREFIX.size + hlen > len(data):
            raise BlobError("header length runs past the end of the blob")
        return cls(cid, data[_PREFIX.size: _PREFIX.size + hlen], data[_PREFIX.size + hlen:])


def _varint(value: int, out: bytearray):
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def _read_varint(data: bytes, pos: int):
    value = shift = 0
    while True:
        if pos >= len(data):
            raise BlobError("truncated varint")
        b = data[pos]
        pos += 1
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, pos
        shift += 7


def encode_mask(validity: np.ndarray) -> bytes:
    """Alternating run lengths (invalid run first) as LEB128 varints, row-major."""
    flat = np.asarray(validity, dtype=bool).ravel()
    edges = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], edges, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat.size and flat[0]:
        runs.insert(0, 0)
    out = bytearray()
    for r in runs:
        _varint(int(r), out)
    return bytes(out)


def decode_mask(data: bytes, shape) -> np.ndarray:
    total = int(np.prod(shape))
    flat = np.zeros(total, dtype=bool)
    pos = idx = 0
    value = False
    while pos < len(data):
        run, pos = _read_varint(data, pos)
        if idx + run > total:
            raise BlobError("validity mask runs exceed the image size")
        flat[idx: idx + run] = value
        idx += run
        value = not value
    if idx != total:
        raise BlobError("validity mask does not cover the image")
    return flat.reshape(shape)


_IMG = struct.Struct("<BBBBHI")


def pack_image_header(layout: Layout, axis: int, bit_depth: int, metas, validity: np.ndarray,
                      grid: GridLayout) -> bytes:
    buf = io.BytesIO()
    buf.write(_IMG.pack(int(layout), axis, bit_depth, len(metas), grid.rows, grid.cols))
    buf.write(np.asarray(grid.elevations, dtype="<f8").tobytes())
    for m in metas:
        buf.write(struct.pack("<dd", m.min_value, m.max_value))
    mask = encode_mask(validity)
    buf.write(struct.pack("<I", len(mask)))
    buf.write(mask)
    return buf.getvalue()


@dataclass
class ImageHeader:
    layout: Layout
    axis: int
    bit_depth: int
    metas: tuple
    validity: np.ndarray
    grid: GridLayout


def unpack_image_header(data: bytes, pos: int = 0):
    """Parse an image header starting at ``pos``; returns (ImageHeader, next position)."""
    try:
        layout, axis, bit_depth, channels, rows, cols = _IMG.unpack_from(data, pos)
        pos += _IMG.size
        elev = np.frombuffer(data, dtype="<f8", count=rows, offset=pos).astype(np.float64)
        pos += 8 * rows
        metas = []
        for _ in range(channels):
            lo, hi = struct.unpack_from("<dd", data, pos)
            pos += 16
            metas.append(QuantizationMeta(lo, hi, bit_depth))
        (mlen,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + mlen > len(data):
            raise BlobError("validity mask runs past the header")
        validity = decode_mask(data[pos: pos + mlen], (rows, cols))
        pos += mlen
        grid = GridLayout(elev, cols)
        header = ImageHeader(Layout(layout), axis, bit_depth, tuple(metas), validity, grid)
    except (struct.error, ValueError) as exc:
        if isinstance(exc, BlobError):
            raise
        raise BlobError(f"malformed image header: {exc}") from None
    if Layout(layout).channels != channels:
        raise BlobError("channel count does not match the layout")
    return header, pos
