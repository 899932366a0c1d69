"""PCD v0.7 (ascii / binary) and CSV point cloud interchange."""

from __future__ import annotations

import csv
import os

import numpy as np

from ..cloud import PointCloud

_TYPE_CODES = {("F", 4): "f4", ("F", 8): "f8", ("I", 1): "i1", ("I", 2): "i2", ("I", 4): "i4", ("I", 8): "i8",
               ("U", 1): "u1", ("U", 2): "u2", ("U", 4): "u4", ("U", 8): "u8"}
_HEADER_KEYS = ("VERSION", "FIELDS", "SIZE", "TYPE", "COUNT", "WIDTH", "HEIGHT", "VIEWPOINT", "POINTS", "DATA")


class PCDError(ValueError):
    pass


def _parse_header(fh):
    header = {}
    lines = {}
    while True:
        raw = fh.readline()
        if not raw:
            raise PCDError("unexpected end of file before DATA line")
        line = raw.decode("ascii", errors="replace").strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        key = key.upper()
        if key not in _HEADER_KEYS:
            raise PCDError(f"unknown header line: {line!r}")
        header[key] = rest.split()
        lines[key] = line
        if key == "DATA":
            return header, lines


def read_pcd(path) -> PointCloud:
    size_on_disk = os.path.getsize(path)
    with open(path, "rb") as fh:
        header, lines = _parse_header(fh)
        fields = header.get("FIELDS")
        if not fields:
            raise PCDError("missing FIELDS line")
        n = len(fields)
        sizes = [int(s) for s in header.get("SIZE", [])]
        types = [t.upper() for t in header.get("TYPE", [])]
        counts = [int(c) for c in header.get("COUNT", ["1"] * n)]
        for key, vals in (("SIZE", sizes), ("TYPE", types), ("COUNT", counts)):
            if len(vals) != n:
                raise PCDError(f"{key} has {len(vals)} entries but FIELDS has {n}: {lines.get(key, key)!r}")
        try:
            width = int(header["WIDTH"][0])
            height = int(header.get("HEIGHT", ["1"])[0])
        except (KeyError, IndexError, ValueError):
            raise PCDError(f"bad or missing WIDTH/HEIGHT: {lines.get('WIDTH')!r}") from None
        npoints = int(header["POINTS"][0]) if "POINTS" in header else width * height
        if npoints != width * height:
            raise PCDError(f"POINTS {npoints} does not match WIDTH*HEIGHT {width * height}: {lines['POINTS']!r}")
        for axis in "xyz":
            if axis not in fields:
                raise PCDError(f"field {axis!r} missing from {lines['FIELDS']!r}")

        cols = []
        for name, size, typ, count in zip(fields, sizes, types, counts):
            code = _TYPE_CODES.get((typ, size))
            if code is None:
                raise PCDError(f"unsupported TYPE/SIZE {typ}/{size} for field {name!r}")
            cols.append((name, "<" + code, (count,)) if count > 1 else (name, "<" + code))
        dtype = np.dtype(cols)
        mode = header["DATA"][0].lower()
        if mode == "ascii":
            flat_cols = sum(counts)
            text = fh.read().decode("ascii")
            values = np.array(text.split(), dtype=np.float64)
            if values.size != npoints * flat_cols:
                raise PCDError(f"expected {npoints} ascii rows of {flat_cols} values, found {values.size} values")
            values = values.reshape(npoints, flat_cols)
            offsets = np.cumsum([0] + counts)
            xyz = np.stack([values[:, offsets[fields.index(a)]] for a in "xyz"], axis=1)
        elif mode == "binary":
            blob = fh.read(npoints * dtype.itemsize)
            if len(blob) != npoints * dtype.itemsize:
                raise PCDError(f"binary DATA truncated: need {npoints * dtype.itemsize} bytes, got {len(blob)}")
            rec = np.frombuffer(blob, dtype=dtype)
            xyz = np.stack([rec[a].astype(np.float64) for a in "xyz"], axis=1)
        else:
            raise PCDError(f"unsupported DATA mode {mode!r}")
    keep = np.all(np.isfinite(xyz), axis=1)
    return PointCloud(xyz[keep], raw_size_bytes=size_on_disk)


def pcd_bytes(cloud: PointCloud, mode: str = "binary") -> bytes:
    """Encode x, y, z as float64 so read_pcd restores the exact coordinates."""
    if mode not in ("ascii", "binary"):
        raise ValueError(f"mode must be 'ascii' or 'binary', got {mode!r}")
    pts = np.ascontiguousarray(cloud.points, dtype="<f8")
    n = len(pts)
    header = (
        "# .PCD v0.7 - Point Cloud Data file format\n"
        "VERSION 0.7\nFIELDS x y z\nSIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\n"
        f"WIDTH {n}\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS {n}\nDATA {mode}\n"
    ).encode("ascii")
    if mode == "binary":
        return header + pts.tobytes()
    return header + "".join(f"{x!r} {y!r} {z!r}\n" for x, y, z in pts.tolist()).encode("ascii")


def write_pcd(cloud: PointCloud, path, mode: str = "binary") -> None:
    data = pcd_bytes(cloud, mode)
    with open(path, "wb") as fh:
        fh.write(data)


def read_csv(path) -> PointCloud:
    """Read x, y, z columns. A first row with no numeric cell is a header.

    Errors name the 1-based data row and column of the offending cell.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    cols = [0, 1, 2]
    if rows and not any(_is_number(c) for c in rows[0]):
        names = [c.strip().lower() for c in rows[0]]
        if all(a in names for a in "xyz"):
            cols = [names.index(a) for a in "xyz"]
        rows = rows[1:]
    pts = np.empty((len(rows), 3), dtype=np.float64)
    for i, row in enumerate(rows):
        for j, c in enumerate(cols):
            try:
                pts[i, j] = float(row[c])
            except (ValueError, IndexError):
                cell = row[c] if c < len(row) else ""
                raise ValueError(f"non-numeric cell {cell!r} at row {i + 1} col {c + 1}") from None
    return PointCloud(pts, raw_size_bytes=os.path.getsize(path))


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True
