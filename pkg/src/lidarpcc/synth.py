"""Deterministic synthetic VLP-16 captures of a street scene.

Rays are cast from a sensor 1.8 m above a flat road against boxes (building
facades, parked cars, one car driving through), vertical cylinders (poles,
trunks) and spheres (tree crowns). Ranges get Gaussian noise, are rounded to
the sensor's 2 mm distance unit and packed into real packet payloads. Rays
that hit nothing occasionally produce a spurious long-range return, as dust,
rain or multipath do in real captures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ingest.pcap import build_packet, write_pcap
from .ingest.sensors import BLOCKS_PER_PACKET, DISTANCE_UNIT_M, SensorModel

SENSOR_HEIGHT = 1.8
MAX_RANGE = 100.0
MIN_RANGE = 0.4


@dataclass
class Scene:
    boxes: np.ndarray  # (n, 6) min xyz, max xyz
    cylinders: np.ndarray  # (n, 5) cx, cy, radius, z0, z1
    spheres: np.ndarray  # (n, 4) cx, cy, cz, radius
    mover: np.ndarray = field(default_factory=lambda: np.zeros(6))  # box at frame 0
    mover_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))  # metres per frame

    def boxes_at(self, frame: int) -> np.ndarray:
        shift = np.tile(self.mover_velocity * frame, 2)
        return np.vstack([self.boxes, (self.mover + shift)[None]])


def street_scene(seed: int = 0) -> Scene:
    """A straight street along +y with buildings, parked cars and vegetation."""
    rng = np.random.default_rng(seed)
    g = -SENSOR_HEIGHT
    boxes = []
    for side in (-1, 1):
        y = -90.0
        while y < 90.0:
            length = rng.uniform(8, 25)
            setback = rng.uniform(9, 13)
            depth = rng.uniform(8, 15)
            height = rng.uniform(6, 25)
            x0 = side * setback if side > 0 else -setback - depth
            boxes.append([x0, y, g, x0 + depth, y + length, g + height])
            y += length + rng.uniform(0.5, 6)
        # parked cars along the kerb
        y = -60.0
        while y < 60.0:
            cx = side * rng.uniform(3.8, 4.6)
            boxes.append([cx - 0.9, y, g, cx + 0.9, y + 4.3, g + rng.uniform(1.4, 1.7)])
            y += 4.3 + rng.uniform(1.5, 12)
    # a cross street building block far ahead and behind
    boxes.append([-40, 70, g, 40, 85, g + 18])
    boxes.append([-35, -80, g, 35, -70, g + 12])

    cylinders, spheres = [], []
    for side in (-1, 1):
        for y in np.arange(-70, 70, 17.0):
            x = side * 6.5 + rng.normal(0, 0.1)
            cylinders.append([x, y + rng.normal(0, 1), 0.09, g, g + 7.5])  # lamp post
        for y in np.arange(-55, 55, 13.0):
            x = side * 7.5 + rng.normal(0, 0.2)
            yy = y + rng.normal(0, 1.5)
            h = rng.uniform(2.5, 3.5)
            cylinders.append([x, yy, 0.2, g, g + h])
            spheres.append([x, yy, g + h + 1.5, rng.uniform(1.4, 2.2)])
    # isolated structures in the far field
    for _ in range(6):
        r, a = rng.uniform(50, 90), rng.uniform(0, 2 * math.pi)
        cylinders.append([r * math.sin(a), r * math.cos(a), 0.15, g, g + rng.uniform(4, 12)])

    mover = np.array([-2.9, -25.0, g, -1.1, -20.5, g + 1.5])
    return Scene(np.asarray(boxes, float), np.asarray(cylinders, float), np.asarray(spheres, float), mover,
                 np.array([0.0, 1.2, 0.0]))


def _hit_boxes(d: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    t = np.full(len(d), np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        for b in boxes:
            t1 = b[:3] * inv
            t2 = b[3:] * inv
            near = np.nanmax(np.minimum(t1, t2), axis=1)
            far = np.nanmin(np.maximum(t1, t2), axis=1)
            ok = (near <= far) & (near > 0)
            np.minimum(t, np.where(ok, near, np.inf), out=t)
    return t


def _hit_cylinders(d: np.ndarray, cyl: np.ndarray) -> np.ndarray:
    t = np.full(len(d), np.inf)
    a = d[:, 0] ** 2 + d[:, 1] ** 2
    for cx, cy, r, z0, z1 in cyl:
        b = -2 * (d[:, 0] * cx + d[:, 1] * cy)
        c = cx * cx + cy * cy - r * r
        disc = b * b - 4 * a * c
        ok = disc >= 0
        root = np.where(ok, (-b - np.sqrt(np.where(ok, disc, 0))) / (2 * a + 1e-300), np.inf)
        z = root * d[:, 2]
        ok &= (root > 0) & (z >= z0) & (z <= z1)
        np.minimum(t, np.where(ok, root, np.inf), out=t)
    return t


def _hit_spheres(d: np.ndarray, sph: np.ndarray) -> np.ndarray:
    t = np.full(len(d), np.inf)
    for cx, cy, cz, r in sph:
        c = np.array([cx, cy, cz])
        b = d @ c
        disc = b * b - (c @ c - r * r)
        ok = disc >= 0
        root = np.where(ok, b - np.sqrt(np.where(ok, disc, 0)), np.inf)
        ok &= root > 0
        np.minimum(t, np.where(ok, root, np.inf), out=t)
    return t


def cast(scene: Scene, directions: np.ndarray, frame: int = 0) -> np.ndarray:
    """Exact range along each unit direction (inf when nothing is hit)."""
    d = directions
    with np.errstate(divide="ignore"):
        ground = np.where(d[:, 2] < 0, -SENSOR_HEIGHT / d[:, 2], np.inf)
    return np.minimum.reduce([
        ground,
        _hit_boxes(d, scene.boxes_at(frame)),
        _hit_cylinders(d, scene.cylinders),
        _hit_spheres(d, scene.spheres),
    ])


@dataclass
class SynthConfig:
    frames: int = 20
    seed: int = 0
    model: SensorModel = SensorModel.VLP16
    rpm: int = 600
    noise_m: float = 0.01
    spurious_rate: float = 1e-3  # per ray that hits nothing
    start_azimuth: int = 0  # 0.01 deg ticks


def synth_payloads(cfg: SynthConfig = SynthConfig()) -> list:
    """Packet payloads covering ``cfg.frames`` full rotations."""
    model = SensorModel.parse(cfg.model)
    if model != SensorModel.VLP16:
        raise ValueError("the generator emits VLP-16 packets only")
    rng = np.random.default_rng(cfg.seed + 1)
    scene = street_scene(cfg.seed)
    step = model.firing_step_ticks * cfg.rpm // 600
    block_step = 2 * step
    blocks_per_frame = 36000 // block_step
    elev = np.asarray(model.elevations)
    payloads = []
    dt_us = _packet_interval_us(cfg)
    total_blocks = cfg.frames * blocks_per_frame + BLOCKS_PER_PACKET  # one packet of the next turn closes the last frame
    n_packets = -(-total_blocks // BLOCKS_PER_PACKET)
    for p in range(n_packets):
        blk = p * BLOCKS_PER_PACKET + np.arange(BLOCKS_PER_PACKET)
        frame = np.minimum(blk // blocks_per_frame, cfg.frames - 1)
        az_blocks = (cfg.start_azimuth + blk * block_step) % 36000
        # 32 channels per block: lasers 0-15 at the block azimuth, again half a block later
        az = (az_blocks[:, None] + np.repeat([0, step], 16)[None]) % 36000
        omega = np.tile(elev, 2)[None].repeat(BLOCKS_PER_PACKET, 0)
        alpha = np.radians(az / 100.0)
        dirs = np.stack([np.cos(omega) * np.sin(alpha), np.cos(omega) * np.cos(alpha), np.sin(omega)], -1)
        rng_m = np.empty(omega.shape)
        for f in np.unique(frame):
            sel = frame == f
            rng_m[sel] = cast(scene, dirs[sel].reshape(-1, 3), int(f)).reshape(-1, 32)
        miss = ~np.isfinite(rng_m)
        rng_m = rng_m + rng.normal(0, cfg.noise_m, rng_m.shape)
        spurious = miss & (rng.random(rng_m.shape) < cfg.spurious_rate)
        rng_m[spurious] = rng.uniform(0.4 * MAX_RANGE, MAX_RANGE, int(spurious.sum()))
        rng_m[(miss & ~spurious) | (rng_m > MAX_RANGE) | (rng_m < MIN_RANGE)] = 0
        raw = np.rint(rng_m / DISTANCE_UNIT_M).astype(np.uint16)
        refl = np.where(raw > 0, 40, 0)
        payloads.append(build_packet(az_blocks, raw, model, refl, int(p * dt_us)))
    return payloads


def _packet_interval_us(cfg: SynthConfig) -> float:
    step = SensorModel.parse(cfg.model).firing_step_ticks * cfg.rpm // 600
    blocks_per_turn = 36000 / (2 * step)
    return 60e6 / cfg.rpm / (blocks_per_turn / BLOCKS_PER_PACKET)


def write_synthetic_capture(path, cfg: SynthConfig = SynthConfig()) -> int:
    """Write ``cfg.frames`` rotations to a libpcap file; returns its size in bytes."""
    payloads = synth_payloads(cfg)
    dt_us = _packet_interval_us(cfg)
    return write_pcap(path, payloads, timestamps_us=[int(i * dt_us) for i in range(len(payloads))])
