"""Scikit-learn style estimator wrapping the dynamic index.

``fit`` ingests the rows of ``X`` through the configured engine's insert
path and ``kneighbors`` mirrors ``sklearn.neighbors.NearestNeighbors``.
Returned indices are node ids, which stay valid as handles across later
``insert``/``remove`` calls (the index is fully dynamic, so positional row
indices would not be stable).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .bridge import BridgeConfig, PREDICATE_SAME_DEPTH
from .graph import IndexParams
from .index import DynamicIndex, EngineMode
from .metrics import Metric


class GraphNearestNeighbors(BaseEstimator):
    """Approximate nearest-neighbor search over a dynamic graph index.

    Parameters mirror the index hyperparameters: ``graph_degree`` bounds the
    out-degree, ``beam_width``/``insert_beam_width`` control search scope,
    ``alpha`` the pruning sparsity, ``eagerness`` the tombstone-cleaning
    threshold.
    """

    def __init__(
        self,
        n_neighbors: int = 10,
        metric: str = "l2",
        engine: str = "cleann",
        graph_degree: int = 64,
        beam_width: int = 75,
        insert_beam_width: int = 64,
        alpha: float = 1.2,
        eagerness: int = 7,
        bridge: bool = True,
        bridge_predicate: str = PREDICATE_SAME_DEPTH,
        capacity_factor: float = 1.2,
    ) -> None:
        self.n_neighbors = n_neighbors
        self.metric = metric
        self.engine = engine
        self.graph_degree = graph_degree
        self.beam_width = beam_width
        self.insert_beam_width = insert_beam_width
        self.alpha = alpha
        self.eagerness = eagerness
        self.bridge = bridge
        self.bridge_predicate = bridge_predicate
        self.capacity_factor = capacity_factor

    def fit(self, X, y=None) -> "GraphNearestNeighbors":
        X = check_array(X, dtype=np.float32)
        params = IndexParams(
            dim=X.shape[1],
            R=self.graph_degree,
            L=self.beam_width,
            L_I=self.insert_beam_width,
            alpha=self.alpha,
            C=self.eagerness,
            metric=Metric.parse(self.metric),
            capacity=max(X.shape[0] + 1, int(np.ceil(self.capacity_factor * X.shape[0]))),
        )
        bridge_cfg = BridgeConfig(predicate=self.bridge_predicate, enabled=self.bridge)
        self.index_ = DynamicIndex(
            params, engine=EngineMode.parse(self.engine), bridge=bridge_cfg
        )
        self.node_ids_ = np.asarray([self.index_.insert(row) for row in X])
        self.n_features_in_ = X.shape[1]
        return self

    def insert(self, X) -> np.ndarray:
        """Add rows to the fitted index; returns their node ids."""
        check_is_fitted(self, "index_")
        X = check_array(X, dtype=np.float32)
        return np.asarray([self.index_.insert(row) for row in X])

    def remove(self, node_ids) -> None:
        """Delete points by node id (tombstoned, then cleaned semi-lazily)."""
        check_is_fitted(self, "index_")
        for v in np.atleast_1d(node_ids):
            self.index_.delete(int(v))

    def kneighbors(self, X, n_neighbors: int | None = None, return_distance: bool = True):
        """Node ids (and scores) of the approximate nearest neighbors of each row."""
        check_is_fitted(self, "index_")
        X = check_array(X, dtype=np.float32)
        k = n_neighbors if n_neighbors is not None else self.n_neighbors
        ids = np.full((X.shape[0], k), -1, dtype=np.int64)
        dists = np.full((X.shape[0], k), np.inf)
        for i, row in enumerate(X):
            hits = self.index_.search(row, k, performance_sensitive=True)
            for j, (v, d) in enumerate(hits):
                ids[i, j] = v
                dists[i, j] = d
        if return_distance:
            return dists, ids
        return ids
