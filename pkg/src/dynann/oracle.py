"""Brute-force exact kNN and recall: the ground truth for every quality test."""

from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np

from .metrics import Metric, distances_to


def exact_knn(
    q: np.ndarray,
    k: int,
    points: np.ndarray,
    metric: Metric = Metric.L2,
    ids: Sequence[int] | None = None,
) -> list[int]:
    """Exact k nearest neighbors of ``q`` by linear scan.

    ``points`` is an ``(n, dim)`` array; ``ids`` optionally labels each row
    (defaults to row indices). Ties break toward the lower id. If ``k``
    exceeds ``n`` the result is truncated with a warning.
    """
    points = np.asarray(points)
    n = points.shape[0]
    id_arr = np.arange(n) if ids is None else np.asarray(list(ids))
    if k > n:
        warnings.warn(f"k={k} exceeds {n} points; truncating", stacklevel=2)
        k = n
    dists = distances_to(q, points, metric)
    order = np.lexsort((id_arr, dists))
    return [int(id_arr[i]) for i in order[:k]]


def recall(result: Sequence[int], truth: Sequence[int]) -> float:
    """Recall k@k: ``|result intersect truth| / |truth|``."""
    truth_set = set(truth)
    if not truth_set:
        return 0.0
    return len(set(result) & truth_set) / len(truth_set)
