"""Distance functions shared by search, pruning, and the brute-force oracle.

Every metric is expressed as a "smaller is closer" score so all callers
minimize uniformly:

* ``L2`` is the *squared* Euclidean distance (ordering-equivalent to the
  true distance and cheaper; every comparison in this package is
  ordering-based).
* ``INNER_PRODUCT`` is the negated dot product.
* ``COSINE`` is the negated cosine similarity; a zero vector scores ``+inf``
  so it is never selected.
"""

from __future__ import annotations

from enum import Enum

import numpy as np


class Metric(Enum):
    L2 = "l2"
    INNER_PRODUCT = "ip"
    COSINE = "cosine"

    @classmethod
    def parse(cls, name: str) -> "Metric":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown metric {name!r}; expected one of l2, ip, cosine")


def distance(x: np.ndarray, y: np.ndarray, metric: Metric = Metric.L2) -> float:
    """Score between two vectors; smaller means closer."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 1:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if metric is Metric.L2:
        d = x - y
        return float(np.dot(d, d))
    if metric is Metric.INNER_PRODUCT:
        return float(-np.dot(x, y))
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        return float("inf")
    return float(-np.dot(x, y) / (nx * ny))


def distances_to(q: np.ndarray, points: np.ndarray, metric: Metric = Metric.L2) -> np.ndarray:
    """Scores from ``q`` to every row of ``points`` (shape ``(n, dim)``)."""
    if not (isinstance(q, np.ndarray) and q.dtype == np.float64):
        q = np.asarray(q, dtype=np.float64)
    if not (isinstance(points, np.ndarray) and points.dtype == np.float64):
        points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != q.shape[0]:
        raise ValueError(f"dimension mismatch: query {q.shape} vs points {points.shape}")
    if metric is Metric.L2:
        d = points - q
        return np.einsum("ij,ij->i", d, d)
    dots = points @ q
    if metric is Metric.INNER_PRODUCT:
        return -dots
    nq = np.linalg.norm(q)
    norms = np.linalg.norm(points, axis=1)
    out = np.full(points.shape[0], np.inf)
    if nq == 0.0:
        return out
    ok = norms > 0.0
    out[ok] = -dots[ok] / (norms[ok] * nq)
    return out
