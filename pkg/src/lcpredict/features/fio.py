"""Feature matrix container: compact binary layout plus a CSV alternative.

Binary layout: magic ``LCFB`` + u16 format version + 64-hex-char manifest
hash + u64 row count + u32 column count, then the row-major float32
matrix, then one label byte per row. A small CSV sidecar (``<name>.idx.csv``)
carries per-row sample identity so later stages can split by location and
group by track.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from ..errors import ManifestMismatch

MAGIC = b"LCFB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sH64sQI")

INDEX_FIELDS = ("recording_id", "location_id", "track_id", "anchor_frame")


def save_features(path, X, y, manifest_hash: str, index=None) -> Path:
    path = Path(path)
    X = np.ascontiguousarray(X, dtype=np.float32)
    y = np.asarray(y, dtype=np.int8)
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"rows {X.shape[0]} != labels {y.shape[0]}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, manifest_hash.encode(),
                              X.shape[0], X.shape[1]))
        fh.write(X.tobytes(order="C"))
        fh.write(y.tobytes())
    if index is not None:
        with open(path.with_suffix(path.suffix + ".idx.csv"), "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(INDEX_FIELDS)
            wr.writerows(index)
    return path


def load_features(path, expect_manifest_hash: str = None):
    """Returns (X float32 (n,d), y int8 (n,), manifest_hash, index-or-None)."""
    path = Path(path)
    blob = path.read_bytes()
    magic, version, mhash, rows, cols = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise ValueError(f"{path} is not a feature file")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported feature file version {version}")
    mhash = mhash.decode()
    if expect_manifest_hash is not None and mhash != expect_manifest_hash:
        raise ManifestMismatch(expect_manifest_hash, mhash)
    off = _HEADER.size
    n_floats = rows * cols
    X = np.frombuffer(blob, dtype=np.float32, count=n_floats, offset=off).reshape(rows, cols)
    y = np.frombuffer(blob, dtype=np.int8, count=rows, offset=off + 4 * n_floats)
    idx_path = path.with_suffix(path.suffix + ".idx.csv")
    index = None
    if idx_path.exists():
        with open(idx_path, newline="") as fh:
            index = [tuple(int(v) for v in row) for row in list(csv.reader(fh))[1:]]
    return X.copy(), y.copy(), mhash, index


def save_features_csv(path, X, y, manifest) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(list(manifest.names) + ["label"])
        for row, label in zip(np.asarray(X, dtype=np.float32), y):
            wr.writerow([f"{v:.9g}" for v in row] + [int(label)])
    return path
