"""Sliding-window workload driver.

Three protocols, all round-based over a data stream:

* ``batched-update``: each round concurrently inserts a batch of new points
  and deletes an equal number of the oldest ones, then issues training
  searches and recall-measured test searches.
* ``batched-insert``: same, minus the deletes (the window grows).
* ``mixed-update``: inserts, deletes, training and test searches all run
  concurrently; recall is not measured (ground truth is ill-defined), only
  throughput.

Batch size is a fraction (default 1%) of the current index size. Ground
truth is recomputed against the current live window each round (optionally
cached on disk). Training queries are perturbed samples of the test queries;
only test queries run performance-sensitive.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .bridge import BridgeConfig
from .graph import IndexParams
from .index import DynamicIndex, EngineMode, build_static
from .oracle import exact_knn, recall

PROTOCOL_BATCHED_UPDATE = "batched-update"
PROTOCOL_BATCHED_INSERT = "batched-insert"
PROTOCOL_MIXED_UPDATE = "mixed-update"

_PROTOCOLS = (PROTOCOL_BATCHED_UPDATE, PROTOCOL_BATCHED_INSERT, PROTOCOL_MIXED_UPDATE)

METRICS_SCHEMA_VERSION = 1


@dataclass
class WorkloadConfig:
    engine: EngineMode
    window_size: int
    rounds: int
    protocol: str = PROTOCOL_BATCHED_UPDATE
    batch_fraction: float = 0.01
    train_fraction: float = 0.02
    train_count: Optional[int] = None  # fixed-size override for the training set
    train_enabled: bool = True
    ood_training: bool = False  # perturb training queries with 1000x variance
    k: int = 10
    threads: int = 4
    seed: int = 0
    capacity_factor: float = 2.0
    build_passes: int = 2  # rebuild-engine static build passes

    def __post_init__(self) -> None:
        if not (0.0 < self.batch_fraction <= 1.0):
            raise ValueError("batch_fraction must be in (0, 1]")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if self.protocol not in _PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class RoundMetrics:
    round: int
    recall_at_k: Optional[float]
    insert_qps: float
    delete_qps: float
    search_qps: float
    live_nodes: int
    tombstones: int
    replaceable: int
    peak_slots: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = METRICS_SCHEMA_VERSION
        return d


def mean_nn_distance(sample: np.ndarray) -> float:
    """Mean Euclidean 1-NN distance within ``sample`` (each point vs the rest)."""
    sample = np.asarray(sample, dtype=np.float64)
    n = sample.shape[0]
    if n < 2:
        return 0.0
    sq = np.einsum("ij,ij->i", sample, sample)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (sample @ sample.T)
    np.fill_diagonal(d2, np.inf)
    return float(np.sqrt(np.maximum(d2.min(axis=1), 0.0)).mean())


def generate_training_queries(
    test_queries: np.ndarray,
    fraction: float,
    dataset_sample: np.ndarray,
    seed: int,
    variance_scale: float = 1.0,
    count: Optional[int] = None,
) -> np.ndarray:
    """Sample test queries with replacement and add isotropic Gaussian noise.

    The noise standard deviation is the mean 1-NN distance estimated on a
    <=1000-point sample of the dataset; ``variance_scale`` scales the noise
    variance (1000 gives the out-of-distribution variant). Deterministic for
    a fixed seed.
    """
    if not (0.0 < fraction <= 1.0):
        raise ValueError("fraction must be in (0, 1]")
    if len(dataset_sample) == 0:
        raise ValueError("dataset_sample must be nonempty")
    rng = np.random.default_rng(seed)
    n = count if count is not None else int(np.ceil(fraction * len(test_queries)))
    picks = rng.integers(0, len(test_queries), size=n)
    base = np.asarray(test_queries, dtype=np.float32)[picks]
    sample = np.asarray(dataset_sample)
    if len(sample) > 1000:
        sample = sample[rng.choice(len(sample), size=1000, replace=False)]
    sigma = mean_nn_distance(sample) * float(np.sqrt(variance_scale))
    if sigma > 0.0:
        base = base + rng.normal(0.0, sigma, size=base.shape).astype(np.float32)
    return base.astype(np.float32)


def _truth_cache_key(data: np.ndarray, cfg: WorkloadConfig, round_no: int) -> str:
    h = hashlib.sha1()
    h.update(np.ascontiguousarray(data).tobytes()[:1 << 20])
    h.update(
        json.dumps(
            [cfg.engine.value, cfg.window_size, cfg.rounds, cfg.protocol,
             cfg.batch_fraction, cfg.k, cfg.seed, round_no]
        ).encode()
    )
    return h.hexdigest()


class _WindowState:
    """Insertion-ordered window of (data index, node id) pairs."""

    def __init__(self) -> None:
        self.entries: deque[tuple[int, Optional[int]]] = deque()
        self.lock = threading.Lock()

    def append(self, data_idx: int, node_id: Optional[int]) -> None:
        with self.lock:
            self.entries.append((data_idx, node_id))

    def pop_oldest(self, count: int) -> list[tuple[int, Optional[int]]]:
        with self.lock:
            return [self.entries.popleft() for _ in range(min(count, len(self.entries)))]

    def data_indices(self) -> list[int]:
        with self.lock:
            return [d for d, _ in self.entries]


def run_sliding_window(
    cfg: WorkloadConfig,
    data: np.ndarray,
    test_queries: np.ndarray,
    params: Optional[IndexParams] = None,
    bridge: Optional[BridgeConfig] = None,
    metrics_sink: Optional[Callable[[RoundMetrics], None]] = None,
    truth_cache_dir: Optional[str] = None,
) -> list[RoundMetrics]:
    """Run the configured protocol; returns per-round metrics.

    Stops cleanly with partial metrics when the data stream is exhausted.
    ``BENCH_THREADS`` in the environment overrides ``cfg.threads``.
    """
    data = np.asarray(data, dtype=np.float32)
    test_queries = np.asarray(test_queries, dtype=np.float32)
    n, dim = data.shape
    if cfg.window_size > n:
        raise ValueError("dataset smaller than the initial window")
    threads = int(os.environ.get("BENCH_THREADS", cfg.threads))
    if cfg.engine is EngineMode.REBUILD and cfg.protocol == PROTOCOL_MIXED_UPDATE:
        raise ValueError("rebuild engine cannot run concurrently with updates")

    if params is None:
        params = IndexParams(dim=dim)
    capacity = _required_capacity(cfg)
    params = IndexParams(
        dim=dim, R=params.R, L=params.L, L_I=params.L_I, alpha=params.alpha,
        C=params.C, S=params.S, metric=params.metric, capacity=capacity,
    )

    window = _WindowState()
    rebuild = cfg.engine is EngineMode.REBUILD
    if rebuild:
        index = build_static(
            data[: cfg.window_size], params, passes=cfg.build_passes, seed=cfg.seed
        )
        for i in range(cfg.window_size):
            window.append(i, None)
    else:
        index = DynamicIndex(params, engine=cfg.engine, bridge=bridge)
        for i in range(cfg.window_size):
            window.append(i, index.insert(data[i]))

    next_ptr = cfg.window_size
    results: list[RoundMetrics] = []
    pool = ThreadPoolExecutor(max_workers=threads)
    op_rng = random.Random(cfg.seed)

    try:
        for round_no in range(1, cfg.rounds + 1):
            live = len(window.entries)
            batch = max(1, int(round(cfg.batch_fraction * live)))
            if next_ptr + batch > n:
                break  # data stream exhausted: stop with partial metrics
            insert_indices = list(range(next_ptr, next_ptr + batch))
            next_ptr += batch
            deletes = (
                window.pop_oldest(batch)
                if cfg.protocol in (PROTOCOL_BATCHED_UPDATE, PROTOCOL_MIXED_UPDATE)
                else []
            )

            train_queries = None
            if cfg.train_enabled:
                train_queries = generate_training_queries(
                    test_queries,
                    cfg.train_fraction,
                    data[max(0, next_ptr - cfg.window_size): next_ptr],
                    seed=cfg.seed * 10_000 + round_no,
                    variance_scale=1000.0 if cfg.ood_training else 1.0,
                    count=cfg.train_count,
                )

            if rebuild:
                metrics = _run_rebuild_round(
                    cfg, index, params, data, window, insert_indices, deletes,
                    train_queries, test_queries, round_no, pool,
                )
                index = metrics[0]
                rm = metrics[1]
            elif cfg.protocol == PROTOCOL_MIXED_UPDATE:
                rm = _run_mixed_round(
                    cfg, index, data, window, insert_indices, deletes,
                    train_queries, test_queries, round_no, pool, op_rng,
                )
            else:
                rm = _run_batched_round(
                    cfg, index, data, window, insert_indices, deletes,
                    train_queries, test_queries, round_no, pool, op_rng,
                    truth_cache_dir,
                )
            results.append(rm)
            if metrics_sink is not None:
                metrics_sink(rm)
    finally:
        pool.shutdown(wait=True)
    return results


def _required_capacity(cfg: WorkloadConfig) -> int:
    if cfg.protocol == PROTOCOL_BATCHED_INSERT:
        est = cfg.window_size * (1.0 + cfg.batch_fraction) ** cfg.rounds
        return int(np.ceil(est * 1.05)) + 16
    return int(np.ceil(cfg.window_size * cfg.capacity_factor)) + 16


def _measure_recall(
    index: DynamicIndex, test_queries: np.ndarray, k: int,
    truth: Optional[np.ndarray] = None,
) -> tuple[float, np.ndarray]:
    vecs, ids = index.live_vectors()
    if truth is None:
        truth = np.asarray(
            [exact_knn(q, k, vecs, index.params.metric, ids) for q in test_queries],
            dtype=np.int64,
        )
    recalls = []
    for q, t in zip(test_queries, truth):
        got = [v for v, _ in index.search(q, k, performance_sensitive=True)]
        recalls.append(recall(got, list(t)))
    return float(np.mean(recalls)) if recalls else 0.0, truth


def _round_metrics(
    index: DynamicIndex, round_no: int, rec: Optional[float],
    n_ins: int, t_ins: float, n_del: int, t_del: float, n_search: int, t_search: float,
) -> RoundMetrics:
    s = index.stats()
    return RoundMetrics(
        round=round_no,
        recall_at_k=rec,
        insert_qps=n_ins / t_ins if t_ins > 0 else 0.0,
        delete_qps=n_del / t_del if t_del > 0 else 0.0,
        search_qps=n_search / t_search if t_search > 0 else 0.0,
        live_nodes=s["live"],
        tombstones=s["tombstoned"],
        replaceable=s["replaceable"],
        peak_slots=s["peak_slots"],
    )


def _run_batched_round(
    cfg, index, data, window, insert_indices, deletes, train_queries,
    test_queries, round_no, pool, op_rng, truth_cache_dir,
):
    ops: list[tuple[str, int, Optional[int]]] = [
        ("insert", i, None) for i in insert_indices
    ] + [("delete", d, v) for d, v in deletes]
    op_rng.shuffle(ops)

    def run_op(op):
        kind, data_idx, node = op
        if kind == "insert":
            window.append(data_idx, index.insert(data[data_idx]))
        else:
            index.delete(node)

    t0 = time.perf_counter()
    list(pool.map(run_op, ops))
    update_elapsed = time.perf_counter() - t0  # barrier: all updates done

    consolidation = None
    if index.engine is EngineMode.FRESH:
        # Global consolidation runs concurrently with the search batch.
        consolidation = threading.Thread(target=index.consolidate_all)
        consolidation.start()

    t1 = time.perf_counter()
    if train_queries is not None and len(train_queries):
        list(
            pool.map(
                lambda q: index.search(q, cfg.k, performance_sensitive=False),
                train_queries,
            )
        )

    truth = None
    if truth_cache_dir:
        key = _truth_cache_key(data, cfg, round_no)
        cache_path = Path(truth_cache_dir) / f"{key}.npy"
        if cache_path.exists():
            truth = np.load(cache_path)
    rec, truth = _measure_recall(index, test_queries, cfg.k, truth)
    if truth_cache_dir:
        Path(truth_cache_dir).mkdir(parents=True, exist_ok=True)
        np.save(Path(truth_cache_dir) / f"{_truth_cache_key(data, cfg, round_no)}.npy", truth)
    search_elapsed = time.perf_counter() - t1

    if consolidation is not None:
        consolidation.join()

    n_ins = len(insert_indices)
    n_del = len(deletes)
    n_search = len(test_queries) + (len(train_queries) if train_queries is not None else 0)
    return _round_metrics(
        index, round_no, rec, n_ins, update_elapsed, n_del, update_elapsed,
        n_search, search_elapsed,
    )


def _run_mixed_round(
    cfg, index, data, window, insert_indices, deletes, train_queries,
    test_queries, round_no, pool, op_rng,
):
    ops: list[tuple] = (
        [("insert", i, None) for i in insert_indices]
        + [("delete", d, v) for d, v in deletes]
        + [("train", q, None) for q in (train_queries if train_queries is not None else [])]
        + [("test", q, None) for q in test_queries]
    )
    op_rng.shuffle(ops)

    def run_op(op):
        kind, payload, node = op
        if kind == "insert":
            window.append(payload, index.insert(data[payload]))
        elif kind == "delete":
            index.delete(node)
        elif kind == "train":
            index.search(payload, cfg.k, performance_sensitive=False)
        else:
            index.search(payload, cfg.k, performance_sensitive=True)

    t0 = time.perf_counter()
    list(pool.map(run_op, ops))
    elapsed = time.perf_counter() - t0

    n_search = len(test_queries) + (len(train_queries) if train_queries is not None else 0)
    return _round_metrics(
        index, round_no, None, len(insert_indices), elapsed, len(deletes), elapsed,
        n_search, elapsed,
    )


def _run_rebuild_round(
    cfg, index, params, data, window, insert_indices, deletes, train_queries,
    test_queries, round_no, pool,
):
    # Window bookkeeping only; the whole index is swapped between rounds.
    for i in insert_indices:
        window.append(i, None)
    t0 = time.perf_counter()
    window_data = data[np.asarray(window.data_indices())]
    index = build_static(window_data, params, passes=cfg.build_passes, seed=cfg.seed)
    build_elapsed = time.perf_counter() - t0

    t1 = time.perf_counter()
    if train_queries is not None and len(train_queries):
        list(
            pool.map(
                lambda q: index.search(q, cfg.k, performance_sensitive=False),
                train_queries,
            )
        )
    rec, _ = _measure_recall(index, test_queries, cfg.k)
    search_elapsed = time.perf_counter() - t1

    n_search = len(test_queries) + (len(train_queries) if train_queries is not None else 0)
    rm = _round_metrics(
        index, round_no, rec, len(insert_indices), build_elapsed, len(deletes),
        build_elapsed, n_search, search_elapsed,
    )
    return index, rm
