"""Public index façade: insert, delete, search, static builds, save/load.

Engine modes select the maintenance strategy:

* ``CLEANN``: bridge-building inserts, clean dynamic searches, on-the-fly
  consolidation and semi-lazy slot reuse.
* ``NAIVE``: plain greedy inserts; deleted points stay tombstoned forever.
* ``FRESH``: plain greedy inserts plus a periodic global consolidation pass
  (``consolidate_all``), driven externally by the workload harness.
* ``REBUILD``: the index is rebuilt from scratch between rounds
  (``build_static``); not meant to run concurrently with updates.

All public operations are safe to call concurrently from many threads; the
handle needs no external synchronization (Rebuild mode excepted, as above).
"""

from __future__ import annotations

import struct
import threading
import warnings
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .bridge import BridgeConfig
from .consolidate import global_consolidate_baseline
from .graph import (
    IndexParams,
    InvariantViolationError,
    REUSE_FRESH_FIRST,
    SlotArena,
    SlotStatus,
)
from .metrics import Metric, distances_to
from .prune import add_neighbors, robust_prune
from .search import SearchResult, clean_dynamic_beam_search, greedy_beam_search


class EngineMode(Enum):
    CLEANN = "cleann"
    NAIVE = "naive"
    FRESH = "fresh"
    REBUILD = "rebuild"

    @classmethod
    def parse(cls, name: str) -> "EngineMode":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(
                f"unknown engine {name!r}; expected one of cleann, naive, fresh, rebuild"
            )


_MAGIC = b"DANN"
_VERSION = 1


class DynamicIndex:
    """Fully dynamic graph ANN index over a fixed-capacity slot arena."""

    def __init__(
        self,
        params: IndexParams,
        engine: EngineMode = EngineMode.CLEANN,
        bridge: Optional[BridgeConfig] = None,
        reuse_priority: str = REUSE_FRESH_FIRST,
    ) -> None:
        if params.capacity < 1:
            raise InvariantViolationError("params.capacity must be set")
        self.params = params
        self.engine = engine
        self.bridge = bridge if bridge is not None else BridgeConfig(S=params.S)
        self.arena = SlotArena(
            params.dim, params.capacity, params.R, params.metric, reuse_priority
        )
        self.start_ids: list[int] = []
        self._count_lock = threading.Lock()
        self._live = 0
        self.deletes_touched = 0  # instrumentation: slots touched by delete calls
        self._start_lock = threading.Lock()

    # -- updates ------------------------------------------------------------

    def insert(self, x: np.ndarray) -> int:
        """Insert a data point and return its node id.

        A reused slot keeps its old out-neighbor list; those ids join the
        visited set as neighbor candidates (merge-then-prune), while stale
        incoming edges stay in place as random edges.
        """
        x = np.asarray(x, dtype=np.float32)
        if x.shape != (self.params.dim,):
            raise InvariantViolationError(
                f"vector shape {x.shape} does not match index dim {self.params.dim}"
            )
        vid, old = self.arena.acquire_slot(x)
        with self._count_lock:
            self._live += 1
            live = self._live
        with self._start_lock:
            if not self.start_ids:
                # First point becomes the fixed start node, exempt from reuse.
                self.start_ids = [vid]
                self.arena.pinned.add(vid)
                self.arena.write_neighbors(vid, ())
                return vid
        res = self._update_search(x, live)
        cands = list(res.visited) + list(old)
        with self.arena.adj_write_lock(vid):
            self.arena.set_neighbors_locked(
                vid,
                robust_prune(
                    self.arena, vid, cands, self.params.alpha, self.params.R, self.params.metric
                ),
            )
        for w in self.arena.neighbors_snapshot(vid):
            add_neighbors(
                self.arena, w, (vid,), self.params.alpha, self.params.R, self.params.metric
            )
        return vid

    def _update_search(self, x: np.ndarray, live: int) -> SearchResult:
        if self.engine is EngineMode.CLEANN:
            return clean_dynamic_beam_search(
                self.arena,
                self.params,
                x,
                self.params.L_I,
                self.start_ids,
                performance_sensitive=False,
                bridge_cfg=self.bridge,
                pinned=frozenset(self.arena.pinned),
                live_count=live,
            )
        return greedy_beam_search(
            self.arena, x, self.params.L_I, self.start_ids, self.params.metric
        )

    def delete(self, v: int) -> None:
        """Tombstone a live node. O(1): touches only the node's own entry."""
        touched = self.arena.tombstone(int(v))
        with self._count_lock:
            self._live -= 1
            self.deletes_touched += touched

    # -- queries ------------------------------------------------------------

    def search(
        self, q: np.ndarray, k: int, performance_sensitive: bool = True
    ) -> list[tuple[int, float]]:
        """Return up to ``k`` live nearest neighbors as ``(node id, score)``."""
        if k < 1:
            raise InvariantViolationError("k must be >= 1")
        if k > self.params.L:
            warnings.warn(
                f"k={k} exceeds beam width L={self.params.L}; clamping", stacklevel=2
            )
            k = self.params.L
        if not self.start_ids:
            return []
        res = self._query_search(q, performance_sensitive)
        best_live = [
            (v, d) for v, d in res.best if not self.arena.is_tombstoned(v)
        ]
        return best_live[:k]

    def _query_search(self, q: np.ndarray, performance_sensitive: bool) -> SearchResult:
        if self.engine is EngineMode.CLEANN:
            with self._count_lock:
                live = self._live
            return clean_dynamic_beam_search(
                self.arena,
                self.params,
                q,
                self.params.L,
                self.start_ids,
                performance_sensitive=performance_sensitive,
                bridge_cfg=self.bridge,
                pinned=frozenset(self.arena.pinned),
                live_count=live,
            )
        return greedy_beam_search(
            self.arena, q, self.params.L, self.start_ids, self.params.metric
        )

    def consolidate_all(self) -> None:
        """Global consolidation pass (FreshVamana-style baseline cleaning).

        Pinned start nodes are never purged; release_slot skips them.
        """
        global_consolidate_baseline(self.arena, self.params)

    # -- introspection ------------------------------------------------------

    def live_count(self) -> int:
        with self._count_lock:
            return self._live

    def stats(self) -> dict:
        s = self.arena.stats()
        return {
            "live": s.live,
            "tombstoned": s.tombstoned,
            "replaceable": s.replaceable,
            "edges": s.edges,
            "peak_slots": s.peak_slots,
        }

    def live_vectors(self) -> tuple[np.ndarray, list[int]]:
        """Current live points and their node ids (for oracle ground truth)."""
        ids = self.arena.live_ids()
        return self.arena.vectors[np.asarray(ids, dtype=np.int64)], ids

    # -- persistence --------------------------------------------------------

    def save(self, path: str) -> None:
        """Write the binary snapshot (little-endian; format in the README)."""
        a = self.arena
        with open(path, "wb") as f:
            f.write(_MAGIC)
            s_vals = sorted(self.params.S) if self.params.S is not None else []
            f.write(
                struct.pack(
                    "<IIQIIIdIBBB",
                    _VERSION,
                    self.params.dim,
                    a.capacity,
                    self.params.R,
                    self.params.L,
                    self.params.L_I,
                    self.params.alpha,
                    self.params.C,
                    _metric_code(self.params.metric),
                    _engine_code(self.engine),
                    1 if self.params.S is not None else 0,
                )
            )
            f.write(struct.pack("<I", len(s_vals)))
            f.write(struct.pack(f"<{len(s_vals)}I", *s_vals))
            f.write(struct.pack("<I", len(self.start_ids)))
            f.write(struct.pack(f"<{len(self.start_ids)}I", *self.start_ids))
            for v in range(a.capacity):
                st = int(a.status[v])
                f.write(struct.pack("<B", st))
                if st == SlotStatus.EMPTY:
                    continue
                f.write(a.vectors[v].astype("<f4").tobytes())
                nbrs = a.neighbors_snapshot(v)
                f.write(struct.pack("<I", len(nbrs)))
                f.write(struct.pack(f"<{len(nbrs)}I", *nbrs))
            h_entries = [(v, a.h_get(v)) for v in range(a.capacity) if a.h_get(v) is not None]
            f.write(struct.pack("<Q", len(h_entries)))
            for v, h in h_entries:
                f.write(struct.pack("<II", v, h))
            repl = sorted(a.replaceable_set)
            f.write(struct.pack("<Q", len(repl)))
            f.write(struct.pack(f"<{len(repl)}I", *repl))
            f.write(struct.pack("<Q", a.peak_slots))

    @classmethod
    def load(cls, path: str) -> "DynamicIndex":
        with open(path, "rb") as f:
            magic = f.read(4)
            if magic != _MAGIC:
                raise ValueError(f"bad magic {magic!r}; not an index snapshot")
            (
                version,
                dim,
                capacity,
                R,
                L,
                L_I,
                alpha,
                C,
                metric_code,
                engine_code,
                has_s,
            ) = struct.unpack("<IIQIIIdIBBB", f.read(struct.calcsize("<IIQIIIdIBBB")))
            if version != _VERSION:
                raise ValueError(f"unsupported snapshot version {version}")
            (n_s,) = struct.unpack("<I", f.read(4))
            s_vals = struct.unpack(f"<{n_s}I", f.read(4 * n_s)) if n_s else ()
            params = IndexParams(
                dim=dim,
                R=R,
                L=L,
                L_I=L_I,
                alpha=alpha,
                C=C,
                S=frozenset(s_vals) if has_s else None,
                metric=_metric_from_code(metric_code),
                capacity=capacity,
            )
            idx = cls(params, engine=_engine_from_code(engine_code))
            a = idx.arena
            (n_start,) = struct.unpack("<I", f.read(4))
            idx.start_ids = list(struct.unpack(f"<{n_start}I", f.read(4 * n_start)))
            a.pinned.update(idx.start_ids)
            allocated = 0
            for v in range(capacity):
                (st,) = struct.unpack("<B", f.read(1))
                a.status[v] = st
                if st == SlotStatus.EMPTY:
                    continue
                allocated += 1
                a.vectors[v] = np.frombuffer(f.read(4 * dim), dtype="<f4")
                (deg,) = struct.unpack("<I", f.read(4))
                a._neighbors[v] = tuple(struct.unpack(f"<{deg}I", f.read(4 * deg)))
                a.tombstone_bits[v] = st in (SlotStatus.TOMBSTONED, SlotStatus.REPLACEABLE)
            (n_h,) = struct.unpack("<Q", f.read(8))
            for _ in range(n_h):
                v, h = struct.unpack("<II", f.read(8))
                a._h[v] = h
            (n_repl,) = struct.unpack("<Q", f.read(8))
            a.replaceable_set = set(struct.unpack(f"<{n_repl}I", f.read(4 * n_repl)))
            (peak,) = struct.unpack("<Q", f.read(8))
            a.peak_slots = peak
            # Rebuild the free pool deterministically: smallest empty id first.
            a._next_fresh = capacity
            a._recycled = sorted(
                (v for v in range(capacity) if a.status[v] == SlotStatus.EMPTY),
                reverse=True,
            )
            a._allocated = allocated
            idx._live = int(np.count_nonzero(a.status == SlotStatus.LIVE))
            return idx


def _metric_code(m: Metric) -> int:
    return {Metric.L2: 0, Metric.INNER_PRODUCT: 1, Metric.COSINE: 2}[m]


def _metric_from_code(c: int) -> Metric:
    return {0: Metric.L2, 1: Metric.INNER_PRODUCT, 2: Metric.COSINE}[c]


def _engine_code(e: EngineMode) -> int:
    return {
        EngineMode.CLEANN: 0,
        EngineMode.NAIVE: 1,
        EngineMode.FRESH: 2,
        EngineMode.REBUILD: 3,
    }[e]


def _engine_from_code(c: int) -> EngineMode:
    return {
        0: EngineMode.CLEANN,
        1: EngineMode.NAIVE,
        2: EngineMode.FRESH,
        3: EngineMode.REBUILD,
    }[c]


def _choose_medoid(data: np.ndarray, metric: Metric, seed: int, sample_cap: int = 10_000) -> int:
    """Point minimizing the total distance to a <=10k sample (exact when smaller)."""
    n = data.shape[0]
    rng = np.random.default_rng(seed)
    if n > sample_cap:
        sample = data[rng.choice(n, size=sample_cap, replace=False)]
    else:
        sample = data
    chunk = 512
    sums = np.empty(n, dtype=np.float64)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        block = np.empty((hi - lo, sample.shape[0]))
        for j, row in enumerate(data[lo:hi]):
            block[j] = distances_to(row, sample, metric)
        sums[lo:hi] = block.sum(axis=1)
    return int(np.lexsort((np.arange(n), sums))[0])


def build_static(
    data: np.ndarray,
    params: IndexParams,
    passes: int = 1,
    seed: int = 0,
    engine: EngineMode = EngineMode.REBUILD,
) -> DynamicIndex:
    """Two-pass-capable static build: medoid start, seeded-random insert order.

    Insertions follow the baseline insert (greedy search + prune + backlinks);
    ``passes=2`` refines every neighborhood a second time. Deterministic for
    a fixed seed.
    """
    data = np.asarray(data, dtype=np.float32)
    if data.ndim != 2 or data.shape[0] < 1:
        raise InvariantViolationError("data must be a nonempty (n, dim) array")
    if data.shape[1] != params.dim:
        raise InvariantViolationError(
            f"data dim {data.shape[1]} does not match params.dim {params.dim}"
        )
    if passes not in (1, 2):
        raise InvariantViolationError("passes must be 1 or 2")
    n = data.shape[0]
    if params.capacity < n:
        params = IndexParams(
            dim=params.dim,
            R=params.R,
            L=params.L,
            L_I=params.L_I,
            alpha=params.alpha,
            C=params.C,
            S=params.S,
            metric=params.metric,
            capacity=max(n, int(np.ceil(1.2 * n))),
        )
    idx = DynamicIndex(params, engine=engine)
    a = idx.arena
    for row in data:
        a.acquire_slot(row)
    idx._live = n
    medoid = _choose_medoid(data, params.metric, seed)
    idx.start_ids = [medoid]
    a.pinned.add(medoid)

    rng = np.random.default_rng(seed)
    for p in range(1, passes + 1):
        order = rng.permutation(n)
        for v in order:
            v = int(v)
            res = greedy_beam_search(a, data[v], params.L_I, idx.start_ids, params.metric)
            cands = list(res.visited) + list(a.neighbors_snapshot(v))
            with a.adj_write_lock(v):
                a.set_neighbors_locked(
                    v, robust_prune(a, v, cands, params.alpha, params.R, params.metric)
                )
            for w in a.neighbors_snapshot(v):
                add_neighbors(a, w, (v,), params.alpha, params.R, params.metric)
    return idx
