"""Dataset file formats and synthetic data generation.

Supported vector formats (all little-endian):

* ``fvecs``: per row ``{int32 dim, dim * float32}``
* ``bvecs``: per row ``{int32 dim, dim * uint8}``
* ``fbin``:  ``{int32 n, int32 dim, n * dim * float32}``

Ground-truth files: ``{int32 nq, int32 k}`` header followed by ``nq`` rows
of ``k`` int32 ids.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np


class DatasetParseError(ValueError):
    """Malformed dataset file; the message carries the failing byte offset."""


def _infer_format(path: str) -> str:
    suffix = Path(path).suffix.lstrip(".").lower()
    if suffix in ("fvecs", "bvecs", "fbin"):
        return suffix
    raise DatasetParseError(f"cannot infer format from {path!r}; pass format explicitly")


def load_dataset(path: str, format: str | None = None) -> np.ndarray:
    """Load vectors as a float32 ``(n, dim)`` array."""
    fmt = format or _infer_format(path)
    raw = Path(path).read_bytes()
    if len(raw) == 0:
        raise DatasetParseError(f"{path}: empty file (offset 0)")
    if fmt == "fbin":
        return _parse_fbin(raw, path)
    if fmt in ("fvecs", "bvecs"):
        return _parse_xvecs(raw, path, np.uint8 if fmt == "bvecs" else np.dtype("<f4"))
    raise DatasetParseError(f"unknown format {fmt!r}")


def _parse_fbin(raw: bytes, path: str) -> np.ndarray:
    if len(raw) < 8:
        raise DatasetParseError(f"{path}: truncated fbin header (offset {len(raw)})")
    n, dim = struct.unpack("<ii", raw[:8])
    if n < 0 or dim < 1:
        raise DatasetParseError(f"{path}: bad fbin header n={n} dim={dim} (offset 0)")
    expected = 8 + 4 * n * dim
    if len(raw) != expected:
        raise DatasetParseError(
            f"{path}: fbin payload is {len(raw)} bytes, expected {expected} (offset 8)"
        )
    return np.frombuffer(raw, dtype="<f4", offset=8).reshape(n, dim).astype(np.float32)


def _parse_xvecs(raw: bytes, path: str, payload_dtype) -> np.ndarray:
    itemsize = np.dtype(payload_dtype).itemsize
    rows = []
    offset = 0
    dim = None
    while offset < len(raw):
        if offset + 4 > len(raw):
            raise DatasetParseError(f"{path}: truncated row header (offset {offset})")
        (d,) = struct.unpack_from("<i", raw, offset)
        if d < 1:
            raise DatasetParseError(f"{path}: bad row dim {d} (offset {offset})")
        if dim is None:
            dim = d
        elif d != dim:
            raise DatasetParseError(
                f"{path}: inconsistent dims {dim} vs {d} (offset {offset})"
            )
        start = offset + 4
        end = start + d * itemsize
        if end > len(raw):
            raise DatasetParseError(f"{path}: truncated row payload (offset {start})")
        rows.append(np.frombuffer(raw, dtype=payload_dtype, count=d, offset=start))
        offset = end
    if not rows:
        raise DatasetParseError(f"{path}: no rows (offset 0)")
    return np.vstack(rows).astype(np.float32)


def save_dataset(path: str, data: np.ndarray, format: str | None = None) -> None:
    fmt = format or _infer_format(path)
    data = np.asarray(data)
    with open(path, "wb") as f:
        if fmt == "fbin":
            f.write(struct.pack("<ii", data.shape[0], data.shape[1]))
            f.write(data.astype("<f4").tobytes())
        elif fmt == "fvecs":
            for row in data:
                f.write(struct.pack("<i", len(row)))
                f.write(row.astype("<f4").tobytes())
        elif fmt == "bvecs":
            for row in data:
                f.write(struct.pack("<i", len(row)))
                f.write(row.astype(np.uint8).tobytes())
        else:
            raise DatasetParseError(f"unknown format {fmt!r}")


def save_ground_truth(path: str, truth: np.ndarray) -> None:
    truth = np.asarray(truth, dtype="<i4")
    with open(path, "wb") as f:
        f.write(struct.pack("<ii", truth.shape[0], truth.shape[1]))
        f.write(truth.tobytes())


def load_ground_truth(path: str) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise DatasetParseError(f"{path}: truncated truth header (offset {len(raw)})")
    nq, k = struct.unpack("<ii", raw[:8])
    expected = 8 + 4 * nq * k
    if len(raw) != expected:
        raise DatasetParseError(
            f"{path}: truth payload is {len(raw)} bytes, expected {expected} (offset 8)"
        )
    return np.frombuffer(raw, dtype="<i4", offset=8).reshape(nq, k).copy()


def generate_clustered(
    n: int,
    clusters: int,
    cluster_size: int,
    dim: int,
    seed: int = 0,
    spread: float = 0.02,
) -> np.ndarray:
    """Gaussian clusters around uniform random seed points in the unit hypercube.

    Points come out cluster-contiguous; shuffle on the caller side to get a
    "bad" uniform-random order.
    """
    rng = np.random.default_rng(seed)
    needed = max(clusters, int(np.ceil(n / cluster_size)))
    centers = rng.uniform(0.0, 1.0, size=(needed, dim))
    pts = centers.repeat(cluster_size, axis=0)
    pts = pts + rng.normal(0.0, spread, size=pts.shape)
    return pts[:n].astype(np.float32)
