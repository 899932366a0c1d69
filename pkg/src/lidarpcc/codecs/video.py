"""Sequence codecs over consecutive range images, both at 8 bits per sample.

Inter-frame: for each channel the frames' planes are concatenated in time
order and deflated as one stream, so later frames can reference earlier ones.

Intra-frame: every frame is an independent predictive-coded image blob.
An offset table gives random access to single frames, and damage to one
frame's segment does not propagate.

Header layouts (inside the LPCC blob)::

    inter: u32 frame count | frame count x image header | channels x u32 stream length
    intra: u32 frame count | frame count x (u32 offset, u32 length) into the payload
"""

from __future__ import annotations

import struct

import numpy as np

from ..cloud import QuantizationMeta
from ..projection import RangeImage
from . import deflate
from .container import BlobError, CodecId, CompressedBlob, pack_image_header, unpack_image_header
from .image import predictive_decode, predictive_encode


def to_8bit(image: RangeImage) -> RangeImage:
    """Keep the high byte of 16-bit samples; 8-bit images pass through."""
    if image.bit_depth == 8:
        return image
    metas = tuple(QuantizationMeta(m.min_value, m.max_value, 8) for m in image.metas)
    return RangeImage((image.pixels >> 8).astype(np.uint8), metas, image.validity, image.layout, image.grid,
                      axis=image.axis, collisions=image.collisions)


def _check_sequence(seq):
    seq = list(seq)
    if not seq:
        raise ValueError("a frame sequence needs at least one frame")
    ref = seq[0]
    for img in seq[1:]:
        if (img.pixels.shape != ref.pixels.shape or img.layout != ref.layout or img.axis != ref.axis
                or img.grid != ref.grid):
            raise ValueError("all frames of a sequence must share layout, grid and channel count")
    return [to_8bit(img) for img in seq]


def interframe_encode(seq) -> CompressedBlob:
    frames = _check_sequence(seq)
    header = [struct.pack("<I", len(frames))]
    header += [pack_image_header(f.layout, f.axis, 8, f.metas, f.validity, f.grid) for f in frames]
    streams = []
    for c in range(frames[0].channels):
        vector = np.concatenate([f.pixels[c].ravel() for f in frames])
        streams.append(deflate.compress(vector.tobytes()))
    header += [struct.pack("<I", len(s)) for s in streams]
    return CompressedBlob(CodecId.VIDEO_INTER, b"".join(header), b"".join(streams))


def interframe_decode(blob) -> list:
    if isinstance(blob, (bytes, bytearray)):
        blob = CompressedBlob.from_bytes(bytes(blob))
    if blob.codec_id != CodecId.VIDEO_INTER:
        raise BlobError(f"expected an inter-frame blob, got {blob.codec_id.name}")
    (count,) = struct.unpack_from("<I", blob.header, 0)
    pos = 4
    headers = []
    for _ in range(count):
        hdr, pos = unpack_image_header(blob.header, pos)
        headers.append(hdr)
    if not headers:
        raise BlobError("sequence has no frames")
    channels = len(headers[0].metas)
    lengths = struct.unpack_from(f"<{channels}I", blob.header, pos)
    rows, cols = headers[0].grid.rows, headers[0].grid.cols
    plane = rows * cols
    planes, off = [], 0
    for ln in lengths:
        try:
            raw = deflate.decompress(blob.payload[off: off + ln], size_hint=count * plane)
        except deflate.DeflateError as exc:
            raise BlobError(f"corrupt inter-frame stream: {exc}") from None
        if len(raw) != count * plane:
            raise BlobError("inter-frame stream has the wrong length")
        planes.append(np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols))
        off += ln
    return [
        RangeImage(np.stack([p[i] for p in planes]), h.metas, h.validity, h.layout, h.grid, axis=h.axis)
        for i, h in enumerate(headers)
    ]


def intraframe_encode(seq) -> CompressedBlob:
    frames = _check_sequence(seq)
    segments = [predictive_encode(f).to_bytes() for f in frames]
    table, off = [], 0
    for s in segments:
        table.append(struct.pack("<II", off, len(s)))
        off += len(s)
    header = struct.pack("<I", len(frames)) + b"".join(table)
    return CompressedBlob(CodecId.VIDEO_INTRA, header, b"".join(segments))


def frame_count(blob) -> int:
    if isinstance(blob, (bytes, bytearray)):
        blob = CompressedBlob.from_bytes(bytes(blob))
    return struct.unpack_from("<I", blob.header, 0)[0]


def segment_sizes(blob) -> list:
    """Per-frame segment sizes of an intra-frame blob."""
    if isinstance(blob, (bytes, bytearray)):
        blob = CompressedBlob.from_bytes(bytes(blob))
    n = frame_count(blob)
    return [struct.unpack_from("<II", blob.header, 4 + 8 * i)[1] for i in range(n)]


def decode_frame(blob, index: int) -> RangeImage:
    if isinstance(blob, (bytes, bytearray)):
        blob = CompressedBlob.from_bytes(bytes(blob))
    if blob.codec_id != CodecId.VIDEO_INTRA:
        raise BlobError(f"expected an intra-frame blob, got {blob.codec_id.name}")
    n = frame_count(blob)
    if not 0 <= index < n:
        raise IndexError(f"frame index {index} out of range for {n} frames")
    off, ln = struct.unpack_from("<II", blob.header, 4 + 8 * index)
    if off + ln > len(blob.payload):
        raise BlobError("frame segment runs past the payload")
    return predictive_decode(blob.payload[off: off + ln])


def intraframe_decode(blob) -> list:
    return [decode_frame(blob, i) for i in range(frame_count(blob))]
