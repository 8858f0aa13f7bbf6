"""On-disk formats: EMB1 embeddings, labels CSV, GMM JSON, results files.

EMB1 layout (little-endian): magic b"EMB1", u32 version=1, u32 n, u32 d,
n*d float32 row-major, u8 label flag, then n i32 labels if the flag is 1.
All readers validate magic, counts, and finiteness and raise typed errors
that the CLI maps to exit code 2.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .embed import GmmParams

EMB1_MAGIC = b"EMB1"
EMB1_VERSION = 1


class FileFormatError(IOError):
    """Corrupt or mis-typed input file."""


def write_embedding(path, points: np.ndarray, labels: np.ndarray | None = None) -> None:
    pts = np.ascontiguousarray(points, dtype=np.float32)
    if pts.ndim != 2:
        raise ValueError("points must be 2-D")
    n, d = pts.shape
    with open(path, "wb") as fh:
        fh.write(EMB1_MAGIC)
        fh.write(struct.pack("<III", EMB1_VERSION, n, d))
        fh.write(pts.astype("<f4").tobytes())
        if labels is None:
            fh.write(b"\x00")
        else:
            lab = np.asarray(labels, dtype="<i4")
            if lab.shape != (n,):
                raise ValueError("labels must have length n")
            fh.write(b"\x01")
            fh.write(lab.tobytes())


def _read_exact(fh, count: int, what: str) -> bytes:
    buf = fh.read(count)
    if len(buf) != count:
        raise FileFormatError(
            f"truncated file while reading {what}: wanted {count} bytes, "
            f"got {len(buf)} ({count - len(buf)} missing)")
    return buf


def read_embedding(path) -> tuple[np.ndarray, np.ndarray | None]:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != EMB1_MAGIC:
            raise FileFormatError(f"bad magic {magic!r}, expected {EMB1_MAGIC!r}")
        version, n, d = struct.unpack("<III", _read_exact(fh, 12, "header"))
        if version != EMB1_VERSION:
            raise FileFormatError(f"unsupported version {version}")
        pts = np.frombuffer(
            _read_exact(fh, 4 * n * d, "points"), dtype="<f4").reshape(n, d)
        if not np.all(np.isfinite(pts)):
            raise FileFormatError("non-finite value in points payload")
        flag = _read_exact(fh, 1, "label flag")[0]
        labels = None
        if flag == 1:
            labels = np.frombuffer(
                _read_exact(fh, 4 * n, "labels"), dtype="<i4").astype(np.int64)
        elif flag != 0:
            raise FileFormatError(f"bad label flag {flag}")
        trailing = fh.read(1)
        if trailing:
            raise FileFormatError("trailing bytes after payload")
    return pts.astype(np.float64), labels


def write_labels(path, flat_labels: np.ndarray,
                 level_labels: np.ndarray | None = None) -> None:
    """CSV with header index,label[,l1..lh]."""
    flat = np.asarray(flat_labels, dtype=np.int64)
    header = ["index", "label"]
    rows = [[i, int(flat[i])] for i in range(len(flat))]
    if level_labels is not None:
        ll = np.asarray(level_labels, dtype=np.int64)
        if ll.shape[0] != len(flat):
            raise ValueError("level_labels length mismatch")
        header += [f"l{j + 1}" for j in range(ll.shape[1])]
        for i, row in enumerate(rows):
            row.extend(int(v) for v in ll[i])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_labels(path) -> tuple[np.ndarray, np.ndarray | None]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FileFormatError("empty labels file") from None
        if header[:2] != ["index", "label"]:
            raise FileFormatError(f"bad labels header {header[:2]}")
        h = len(header) - 2
        flat, levels = [], []
        for lineno, row in enumerate(reader):
            if len(row) != len(header):
                raise FileFormatError(f"row {lineno}: expected {len(header)} fields")
            if int(row[0]) != lineno:
                raise FileFormatError(f"row {lineno}: index {row[0]} out of order")
            flat.append(int(row[1]))
            if h:
                levels.append([int(v) for v in row[2:]])
    flat_arr = np.array(flat, dtype=np.int64)
    level_arr = np.array(levels, dtype=np.int64) if h else None
    return flat_arr, level_arr


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_gmm(path, gmm: GmmParams) -> None:
    var = gmm.variances
    payload = {
        "k": gmm.k,
        "dim": gmm.dim,
        "weights": [_fmt(w) for w in gmm.weights],
        "means": [[_fmt(v) for v in row] for row in gmm.means],
        "variances": ([_fmt(v) for v in var] if gmm.spherical
                      else [[_fmt(v) for v in row] for row in var]),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_gmm(path) -> GmmParams:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"invalid GMM JSON: {exc}") from exc
    try:
        k, dim = int(payload["k"]), int(payload["dim"])
        weights = np.array(payload["weights"], dtype=np.float64)
        means = np.array(payload["means"], dtype=np.float64)
        variances = np.array(payload["variances"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"malformed GMM JSON: {exc}") from exc
    if weights.shape != (k,) or means.shape != (k, dim):
        raise FileFormatError("GMM JSON shape mismatch")
    if abs(weights.sum() - 1.0) > 1e-6:
        raise FileFormatError(f"GMM weights sum to {weights.sum():.9g}, not 1")
    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(variances))):
        raise FileFormatError("non-finite GMM parameters")
    try:
        return GmmParams(weights, means, variances)
    except ValueError as exc:
        raise FileFormatError(str(exc)) from exc


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
