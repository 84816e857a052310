"""Reading and writing detector time-tag files.

Binary layout: 8-byte magic "PAIRTAGS", then a little-endian header of two
uint32 (format version, reserved zero), then packed 9-byte records of
(detector uint8, t_ps uint64) sorted by time.  The CSV form carries the same
merged stream as "detector,t_ps" rows with detector letters A and B.
"""

from __future__ import annotations

import csv
import struct

import numpy as np

__all__ = ["MAGIC", "FORMAT_VERSION", "write_tags", "read_tags"]

MAGIC = b"PAIRTAGS"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<II")
_RECORD_DTYPE = np.dtype([("detector", "u1"), ("t_ps", "<u8")])


def _merge(tags_a, tags_b):
    tags_a = np.asarray(tags_a, dtype=np.int64)
    tags_b = np.asarray(tags_b, dtype=np.int64)
    if np.any(tags_a < 0) or np.any(tags_b < 0):
        raise ValueError("time tags must be nonnegative")
    det = np.concatenate((np.zeros(tags_a.size, dtype=np.uint8),
                          np.ones(tags_b.size, dtype=np.uint8)))
    t = np.concatenate((tags_a, tags_b))
    order = np.argsort(t, kind="stable")
    return det[order], t[order]


def write_tags(path, tags_a, tags_b, fmt: str = "bin") -> None:
    """Write two detector streams as one time-sorted tag file."""
    det, t = _merge(tags_a, tags_b)
    if fmt == "bin":
        records = np.empty(t.size, dtype=_RECORD_DTYPE)
        records["detector"] = det
        records["t_ps"] = t.astype(np.uint64)
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(_HEADER.pack(FORMAT_VERSION, 0))
            fh.write(records.tobytes())
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["detector", "t_ps"])
            letters = np.array(["A", "B"])
            for d, tt in zip(letters[det], t):
                writer.writerow([d, int(tt)])
    else:
        raise ValueError("fmt must be 'bin' or 'csv'")


def _read_binary(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError("not a tag file: bad magic")
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError("truncated tag file header")
        version, _reserved = _HEADER.unpack(header)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported tag format version {version}")
        payload = fh.read()
    if len(payload) % _RECORD_DTYPE.itemsize != 0:
        raise ValueError("truncated tag file payload")
    records = np.frombuffer(payload, dtype=_RECORD_DTYPE)
    det = records["detector"]
    if det.size and det.max() > 1:
        raise ValueError("tag file contains detector ids other than 0/1")
    t = records["t_ps"].astype(np.int64)
    return det, t


def _read_csv(path):
    det_list = []
    t_list = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip() for c in header] != ["detector", "t_ps"]:
                raise ValueError("not a tag file: bad csv header")
            for row in reader:
                if not row:
                    continue
                if len(row) != 2 or row[0] not in ("A", "B"):
                    raise ValueError(f"bad tag row: {row!r}")
                det_list.append(0 if row[0] == "A" else 1)
                t_list.append(int(row[1]))
    except (csv.Error, UnicodeDecodeError) as exc:
        raise ValueError("not a tag file: bad csv header") from exc
    return np.asarray(det_list, dtype=np.uint8), np.asarray(t_list, dtype=np.int64)


def read_tags(path):
    """Read a tag file (binary or CSV, autodetected) into two sorted streams.

    Returns (tags_a, tags_b) as int64 arrays.
    """
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        det, t = _read_binary(path)
    else:
        det, t = _read_csv(path)
    tags_a = np.sort(t[det == 0])
    tags_b = np.sort(t[det == 1])
    return tags_a, tags_b
