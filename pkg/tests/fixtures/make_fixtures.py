"""Regenerate the hand-built Velodyne capture fixtures in this directory.

Run from the repository root: ``python3 tests/fixtures/make_fixtures.py``.
Packets are assembled field by field (see tests/oracles.py), independently of
the package's own packet builder. Expected points for the sparse capture are
written next to it as JSON, computed from the VLP-16 decode formula:
x = d cos(w) sin(a), y = d cos(w) cos(a), z = d sin(w) with d in 2 mm units.
"""

import json
import math
import struct
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from oracles import pcap_file, vlp16_payload  # noqa: E402

VLP16_ELEVATION_DEG = [-15, 1, -13, 3, -11, 5, -9, 7, -7, 9, -5, 11, -3, 13, -1, 15]
BLOCK_STEP = 40  # 0.01 deg per block at 600 rpm (two firings of 0.2 deg)


def rotation(distance_of):
    """76 packets: one full turn from 0 deg plus one packet of the next turn."""
    payloads = []
    for p in range(76):
        az = [((p * 12 + b) * BLOCK_STEP) % 36000 for b in range(12)]
        dist = [[distance_of(p, b, ch) for ch in range(32)] for b in range(12)]
        payloads.append(vlp16_payload(az, dist, reflectivity=7, timestamp=p * 1327))
    return payloads


def main():
    # every firing of laser 0 (channels 0 and 16) returns 10.000 m = 5000 units, first turn only
    laser0 = rotation(lambda p, b, ch: 5000 if ch in (0, 16) and p < 75 else 0)
    (HERE / "vlp16_laser0_10m.pcap").write_bytes(pcap_file(laser0))

    (HERE / "vlp16_all_zero.pcap").write_bytes(pcap_file(rotation(lambda p, b, ch: 0)))

    picks = {(0, 0, 0): 1, (0, 0, 16): 2, (3, 5, 7): 4999, (40, 11, 31): 65535, (74, 11, 15): 12345,
             (20, 6, 9): 250}
    sparse = rotation(lambda p, b, ch: picks.get((p, b, ch), 0))
    (HERE / "vlp16_sparse.pcap").write_bytes(pcap_file(sparse))
    expected = []
    for (p, b, ch), d in sorted(picks.items()):
        az = (p * 12 + b) * BLOCK_STEP + (BLOCK_STEP // 2 if ch >= 16 else 0)
        w = math.radians(VLP16_ELEVATION_DEG[ch % 16])
        a = math.radians(az / 100)
        r = d * 0.002
        expected.append({"laser": ch % 16, "azimuth_ticks": az, "distance_units": d,
                         "xyz": [r * math.cos(w) * math.sin(a), r * math.cos(w) * math.cos(a), r * math.sin(w)]})
    (HERE / "vlp16_sparse.json").write_text(json.dumps(expected, indent=1) + "\n")

    # a rotation with one short payload spliced in after packet 10
    short = laser0[:11] + [laser0[11][:1000]] + laser0[11:]
    (HERE / "vlp16_bad_length.pcap").write_bytes(pcap_file(short))

    # the capture cut off in the middle of its last record
    data = pcap_file(laser0)
    (HERE / "vlp16_truncated.pcap").write_bytes(data[:-500])

    # a file whose global header has a bad magic number
    (HERE / "bad_magic.pcap").write_bytes(struct.pack("<I", 0xDEADBEEF) + data[4:200])


if __name__ == "__main__":
    main()
