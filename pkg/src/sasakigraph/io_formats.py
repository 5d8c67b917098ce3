"""Versioned file formats for fields, reports and plot-ready profiles.

Binary grid file (all integers little-endian)::

    offset  size        content
    0       4           magic b"SGF1"
    4       4           uint32 format version (1)
    8       4           uint32 ndim
    12      8 * ndim    uint64 dims, slowest axis first
    ...     8 * prod    float64 values, little-endian, row-major
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SGF1"
BINARY_VERSION = 1
CSV_VERSION = 1
JSON_VERSION = 1


class FormatVersionError(ValueError):
    """A file declares a format version this reader does not know."""


# ----------------------------------------------------------------- binary

def write_field_binary(path, values):
    values = np.ascontiguousarray(values, dtype="<f8")
    head = MAGIC + struct.pack("<II", BINARY_VERSION, values.ndim)
    head += struct.pack(f"<{values.ndim}Q", *values.shape)
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(values.tobytes(order="C"))


def read_field_binary(path):
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a field file")
    version, ndim = struct.unpack_from("<II", data, 4)
    if version != BINARY_VERSION:
        raise FormatVersionError(f"{path}: unsupported binary version {version}")
    dims = struct.unpack_from(f"<{ndim}Q", data, 12)
    off = 12 + 8 * ndim
    count = int(np.prod(dims)) if ndim else 1
    if len(data) - off != 8 * count:
        raise ValueError(f"{path}: payload size does not match header dims {dims}")
    return np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(dims).copy()


# -------------------------------------------------------------------- csv

def axis_names(grid):
    names = [f"x{i + 1}" for i in range(grid.n)]
    return names + (["theta"] if grid.m == 2 else ["phi", "psi"])


def write_field_csv(path, values, grid, name="value"):
    values = np.asarray(values, dtype=float).reshape(grid.shape)
    axes = axis_names(grid)
    idx = np.indices(grid.shape).reshape(len(grid.shape), -1).T
    coords = np.stack([c.reshape(-1) for c in grid.coords], axis=1)
    with open(path, "w", newline="") as fh:
        fh.write(f"# sasakigraph field csv version {CSV_VERSION}\n")
        fh.write(f"# shape {' '.join(str(s) for s in grid.shape)}\n")
        w = csv.writer(fh)
        w.writerow([f"i_{a}" for a in axes] + axes + [name])
        for row_i, row_c, v in zip(idx, coords, values.reshape(-1)):
            w.writerow([*row_i.tolist(), *(repr(float(c)) for c in row_c), repr(float(v))])


def read_field_csv(path):
    """Returns ``(values, header)`` with values reshaped to the stored grid shape."""
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# sasakigraph field csv version"):
            raise ValueError(f"{path}: missing field csv header")
        version = int(first.split()[-1])
        if version != CSV_VERSION:
            raise FormatVersionError(f"{path}: unsupported csv version {version}")
        shape = tuple(int(s) for s in fh.readline().split()[2:])
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    vals = np.array([float(r[-1]) for r in body]).reshape(shape)
    return vals, header


def write_table_csv(path, columns, header_note=None):
    """Plot-ready column table from a dict of equal-length sequences."""
    keys = list(columns)
    n = len(next(iter(columns.values()))) if columns else 0
    with open(path, "w", newline="") as fh:
        fh.write(f"# sasakigraph table csv version {CSV_VERSION}\n")
        if header_note:
            fh.write(f"# {header_note}\n")
        w = csv.writer(fh)
        w.writerow(keys)
        for i in range(n):
            w.writerow([_fmt(columns[k][i]) for k in keys])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ------------------------------------------------------------------- json

def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, kind, payload):
    doc = {"format": kind, "format_version": JSON_VERSION, **payload}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_default, allow_nan=True)
        fh.write("\n")


def read_json(path, kind=None):
    with open(path) as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != JSON_VERSION:
        raise FormatVersionError(f"{path}: unsupported json version {version!r}")
    if kind is not None and doc.get("format") != kind:
        raise ValueError(f"{path}: expected {kind!r} record, found {doc.get('format')!r}")
    return doc


def write_field(directory, stem, values, grid):
    """Write ``stem.csv`` and ``stem.bin``; returns both paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path, bin_path = directory / f"{stem}.csv", directory / f"{stem}.bin"
    write_field_csv(csv_path, values, grid, stem)
    write_field_binary(bin_path, np.asarray(values).reshape(grid.shape))
    return [str(csv_path), str(bin_path)]
