"""Velodyne capture ingestion from classic libpcap files.

Payload layout (1206 bytes, single-return mode)::

    12 x block: uint16 flag 0xEEFF | uint16 azimuth (0.01 deg)
                32 x (uint16 distance (2 mm), uint8 reflectivity)
    uint32 timestamp (us) | uint8 return mode | uint8 product id

All multi-byte fields are little-endian. On the VLP-16 each block carries
two 16-laser firing sequences; the second one is placed halfway to the next
block's azimuth. No per-laser timing interpolation is applied.
"""

from __future__ import annotations

import io
import logging
import os
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Optional, Union

import numpy as np

from ..cloud import PointCloud
from .sensors import (
    BLOCK_FLAG,
    BLOCKS_PER_PACKET,
    CHANNELS_PER_BLOCK,
    DATA_PORT,
    DISTANCE_UNIT_M,
    PAYLOAD_SIZE,
    SensorModel,
)

log = logging.getLogger(__name__)

PCAP_MAGICS = {
    b"\xd4\xc3\xb2\xa1": "<",
    b"\xa1\xb2\xc3\xd4": ">",
    b"\x4d\x3c\xb2\xa1": "<",  # nanosecond timestamps
    b"\xa1\xb2\x3c\x4d": ">",
}
LINKTYPE_ETHERNET = 1
LINKTYPE_RAW = 101

_BLOCK_DTYPE = np.dtype(
    [("flag", "<u2"), ("azimuth", "<u2"), ("returns", [("distance", "<u2"), ("reflectivity", "u1")], (32,))]
)


class PcapError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass
class ParseDiagnostics:
    records: int = 0
    data_packets: int = 0
    bad_length: int = 0
    truncated: int = 0
    ignored: int = 0

    @property
    def skipped(self) -> int:
        return self.bad_length + self.truncated


@dataclass
class CaptureStream:
    """A capture source. ``sensor_model=None`` reads it from the factory byte."""

    source: Union[str, os.PathLike, bytes]
    sensor_model: Optional[SensorModel] = None
    rotation_rpm: int = 600
    data_port: int = DATA_PORT
    diagnostics: ParseDiagnostics = field(default_factory=ParseDiagnostics)

    def read_bytes(self) -> bytes:
        if isinstance(self.source, (bytes, bytearray)):
            return bytes(self.source)
        with open(self.source, "rb") as f:
            return f.read()


def iter_udp_payloads(data: bytes, diagnostics: ParseDiagnostics, port: int = DATA_PORT):
    """Yield UDP payloads sent to ``port``; raises PcapError on a bad file header."""
    if len(data) < 24:
        raise PcapError("malformed PCAP header: file shorter than 24 bytes", 0)
    endian = PCAP_MAGICS.get(data[:4])
    if endian is None:
        raise PcapError(f"malformed PCAP header: bad magic {data[:4].hex()}", 0)
    linktype = struct.unpack_from(endian + "I", data, 20)[0] & 0x0FFFFFFF
    if linktype not in (LINKTYPE_ETHERNET, LINKTYPE_RAW):
        raise PcapError(f"malformed PCAP header: unsupported link type {linktype}", 20)
    offset = 24
    rec = struct.Struct(endian + "IIII")
    while offset < len(data):
        if offset + 16 > len(data):
            diagnostics.truncated += 1
            log.warning("truncated record header at byte %d", offset)
            break
        _, _, incl_len, _ = rec.unpack_from(data, offset)
        start = offset + 16
        end = start + incl_len
        diagnostics.records += 1
        if end > len(data):
            diagnostics.truncated += 1
            log.warning("truncated packet at byte %d", offset)
            break
        offset = end
        payload = _udp_payload(data[start:end], linktype, port)
        if payload is None:
            diagnostics.ignored += 1
            continue
        yield payload


def _udp_payload(frame: bytes, linktype: int, port: int):
    pos = 0
    if linktype == LINKTYPE_ETHERNET:
        if len(frame) < 14:
            return None
        ethertype = struct.unpack_from(">H", frame, 12)[0]
        pos = 14
        if ethertype == 0x8100:  # 802.1Q tag
            if len(frame) < 18:
                return None
            ethertype = struct.unpack_from(">H", frame, 16)[0]
            pos = 18
        if ethertype != 0x0800:
            return None
    if len(frame) < pos + 20 or frame[pos] >> 4 != 4:
        return None
    ihl = (frame[pos] & 0x0F) * 4
    if frame[pos + 9] != 17:
        return None
    udp = pos + ihl
    if len(frame) < udp + 8:
        return None
    dst_port, udp_len = struct.unpack_from(">HH", frame, udp + 2)
    if dst_port != port:
        return None
    return frame[udp + 8: udp + max(udp_len, 8)]


def parse_velodyne_pcap(stream: CaptureStream) -> list:
    """Decode a capture into one PointCloud per full 360 degree rotation.

    A frame closes when the block azimuth wraps past zero. Segments that do
    not cover a full rotation (capture started or stopped mid-sweep) are
    dropped. Zero-distance returns are discarded.
    """
    diag = stream.diagnostics
    payloads = []
    for payload in iter_udp_payloads(stream.read_bytes(), diag, stream.data_port):
        if len(payload) != PAYLOAD_SIZE:
            diag.bad_length += 1
            continue
        payloads.append(payload)
    diag.data_packets = len(payloads)
    if not payloads:
        return []

    model = stream.sensor_model
    if model is None:
        model = _detect_model(payloads[0][-1])
    model = SensorModel.parse(model)

    raw = np.frombuffer(b"".join(p[: BLOCKS_PER_PACKET * 100] for p in payloads), dtype=_BLOCK_DTYPE)
    blocks_ok = raw["flag"] == BLOCK_FLAG
    packet_of_block = np.repeat(np.arange(len(payloads)), BLOCKS_PER_PACKET)
    raw = raw[blocks_ok]
    packet_of_block = packet_of_block[blocks_ok]
    if len(raw) == 0:
        return []

    azimuth = raw["azimuth"].astype(np.int64) % 36000
    distance = raw["returns"]["distance"].astype(np.int64)  # (n_blocks, 32)
    n_blocks = len(raw)

    if model == SensorModel.VLP16:
        gap = (np.roll(azimuth, -1) - azimuth) % 36000
        if n_blocks > 1:
            gap[-1] = gap[-2]
        else:
            gap[:] = 2 * model.firing_step_ticks * stream.rotation_rpm // 600
        second = (azimuth + gap // 2) % 36000
        firing_az = np.concatenate([np.repeat(azimuth[:, None], 16, 1), np.repeat(second[:, None], 16, 1)], axis=1)
        laser = np.tile(np.arange(16), 2)
    else:
        firing_az = np.repeat(azimuth[:, None], CHANNELS_PER_BLOCK, 1)
        laser = np.arange(CHANNELS_PER_BLOCK)
    laser = np.broadcast_to(laser, distance.shape)

    # frame boundaries: index of each block that starts a new rotation
    wraps = np.flatnonzero(azimuth[1:] < azimuth[:-1]) + 1
    bounds = np.concatenate([[0], wraps, [n_blocks]])
    step = np.median((np.diff(azimuth) % 36000)) if n_blocks > 1 else 0
    elevations = model.elevations
    packet_start = np.r_[True, packet_of_block[1:] != packet_of_block[:-1]]

    frames = []
    for seg_start, seg_end in zip(bounds[:-1], bounds[1:]):
        seg_az = azimuth[seg_start:seg_end]
        span = int(seg_az.max() - seg_az.min())
        if span + 2 * step < 36000:
            log.debug("dropping partial rotation of %d blocks (span %.2f deg)", seg_end - seg_start, span / 100)
            continue
        d = distance[seg_start:seg_end].ravel()
        az = firing_az[seg_start:seg_end].ravel()
        lz = laser[seg_start:seg_end].ravel()
        keep = d > 0
        d, az, lz = d[keep], az[keep], lz[keep]
        rho = d * DISTANCE_UNIT_M
        omega = elevations[lz]
        alpha = np.radians(az / 100.0)
        pts = np.stack(
            [rho * np.cos(omega) * np.sin(alpha), rho * np.cos(omega) * np.cos(alpha), rho * np.sin(omega)], axis=1
        )
        # a packet's payload is charged to the frame holding its first block
        raw_bytes = int(packet_start[seg_start:seg_end].sum()) * PAYLOAD_SIZE
        frames.append(
            PointCloud(
                pts,
                laser_id=lz,
                azimuth_bin=az,
                frame_id=len(frames),
                raw_size_bytes=raw_bytes,
                meta={"sensor": model.value, "rpm": stream.rotation_rpm, "packets": len(np.unique(packet_of_block[seg_start:seg_end]))},
            )
        )
    return frames


def _detect_model(product_id: int) -> SensorModel:
    for model in SensorModel:
        if model.product_id == product_id:
            return model
    log.warning("unknown product id 0x%02x, assuming VLP16", product_id)
    return SensorModel.VLP16


def build_packet(azimuths, distances, model=SensorModel.VLP16, reflectivity=None, timestamp_us: int = 0) -> bytes:
    """Pack one data payload.

    ``azimuths`` has 12 entries in 0.01 deg ticks; ``distances`` is a 12 x 32
    array of raw 2 mm distance units.
    """
    model = SensorModel.parse(model)
    blocks = np.zeros(BLOCKS_PER_PACKET, dtype=_BLOCK_DTYPE)
    blocks["flag"] = BLOCK_FLAG
    blocks["azimuth"] = np.asarray(azimuths, dtype=np.int64) % 36000
    blocks["returns"]["distance"] = np.asarray(distances, dtype=np.uint16).reshape(BLOCKS_PER_PACKET, CHANNELS_PER_BLOCK)
    if reflectivity is not None:
        blocks["returns"]["reflectivity"] = np.asarray(reflectivity, dtype=np.uint8).reshape(12, 32)
    return blocks.tobytes() + struct.pack("<IBB", timestamp_us & 0xFFFFFFFF, 0x37, model.product_id)


def _udp_frame(payload: bytes, port: int) -> bytes:
    udp = struct.pack(">HHHH", port, port, 8 + len(payload), 0)
    total = 20 + len(udp) + len(payload)
    ip = struct.pack(">BBHHHBBH4s4s", 0x45, 0, total, 0, 0x4000, 64, 17, 0, bytes([192, 168, 1, 201]), bytes([255] * 4))
    eth = b"\xff" * 6 + b"\x60\x76\x88\x00\x00\x00" + b"\x08\x00"
    return eth + ip + udp + payload


def write_pcap(target: Union[str, os.PathLike, BinaryIO], payloads: Iterable[bytes], port: int = DATA_PORT,
               timestamps_us: Optional[Iterable[int]] = None) -> int:
    """Write UDP payloads as an Ethernet libpcap file; returns bytes written."""
    out = io.BytesIO()
    out.write(struct.pack("<IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, LINKTYPE_ETHERNET))
    payloads = list(payloads)
    ts = list(timestamps_us) if timestamps_us is not None else [i * 1327 for i in range(len(payloads))]
    for payload, t in zip(payloads, ts):
        frame = _udp_frame(payload, port)
        out.write(struct.pack("<IIII", t // 1_000_000, t % 1_000_000, len(frame), len(frame)))
        out.write(frame)
    data = out.getvalue()
    if hasattr(target, "write"):
        target.write(data)
    else:
        with open(target, "wb") as f:
            f.write(data)
    return len(data)
