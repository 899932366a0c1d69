"""Velodyne sensor constants (VLP-16 / HDL-32E user manuals)."""

from __future__ import annotations

import enum

import numpy as np


class SensorModel(str, enum.Enum):
    VLP16 = "VLP16"
    HDL32 = "HDL32"

    @property
    def laser_count(self) -> int:
        return len(ELEVATIONS_DEG[self])

    @property
    def elevations(self) -> np.ndarray:
        """Elevation in radians, indexed by laser id."""
        return np.radians(np.asarray(ELEVATIONS_DEG[self], dtype=np.float64))

    @property
    def product_id(self) -> int:
        return PRODUCT_IDS[self]

    @property
    def firing_step_ticks(self) -> int:
        """Azimuth advance between consecutive firing sequences at 600 rpm, in 0.01 deg."""
        return FIRING_STEP_TICKS[self]

    @classmethod
    def parse(cls, name) -> "SensorModel":
        if isinstance(name, cls):
            return name
        key = str(name).upper().replace("-", "").replace("_", "")
        aliases = {"VLP16": cls.VLP16, "HDL32": cls.HDL32, "HDL32E": cls.HDL32}
        if key not in aliases:
            raise ValueError(f"unknown sensor model {name!r}")
        return aliases[key]


ELEVATIONS_DEG = {
    SensorModel.VLP16: [-15, 1, -13, 3, -11, 5, -9, 7, -7, 9, -5, 11, -3, 13, -1, 15],
    SensorModel.HDL32: [
        -30.67, -9.33, -29.33, -8.00, -28.00, -6.67, -26.67, -5.33,
        -25.33, -4.00, -24.00, -2.67, -22.67, -1.33, -21.33, 0.00,
        -20.00, 1.33, -18.67, 2.67, -17.33, 4.00, -16.00, 5.33,
        -14.67, 6.67, -13.33, 8.00, -12.00, 9.33, -10.67, 10.67,
    ],
}

PRODUCT_IDS = {SensorModel.VLP16: 0x22, SensorModel.HDL32: 0x21}

# 0.2 deg per VLP-16 firing sequence, 0.16 deg per HDL-32E firing, both at 600 rpm
FIRING_STEP_TICKS = {SensorModel.VLP16: 20, SensorModel.HDL32: 16}

DISTANCE_UNIT_M = 0.002
DATA_PORT = 2368
PAYLOAD_SIZE = 1206
BLOCKS_PER_PACKET = 12
CHANNELS_PER_BLOCK = 32
BLOCK_FLAG = 0xEEFF
