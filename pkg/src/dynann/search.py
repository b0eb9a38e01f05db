"""Best-first beam search engines.

Both engines realize the frontier and the best-``L`` set as a single bounded
candidate pool with visited flags (the classic pooled form): entries are
kept sorted ascending by ``(distance, node id)``, the pool is trimmed to
``L``, and the loop explores the closest unvisited pool entry until none
remains. Node id is the deterministic tie-break, so a single-threaded search
on a fixed graph always visits the same sequence.

``clean_dynamic_beam_search`` layers the dynamic-index maintenance on top of
the identical traversal: search-tree recording, tombstone bookkeeping
(mark-replaceable on exploration), on-the-fly consolidation when a live node
frontiers a tombstoned child, and guided bridge building after the loop for
queries that are not performance-sensitive.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import bridge as bridge_mod
from .consolidate import clean_consolidate
from .graph import IndexParams, SlotArena, SlotStatus
from .metrics import Metric, distances_to

_EMPTY = int(SlotStatus.EMPTY)


@dataclass
class SearchTree:
    """Parent/depth record of which node first frontiered each node."""

    parent: dict[int, Optional[int]] = field(default_factory=dict)
    depth: dict[int, int] = field(default_factory=dict)

    def record(self, child: int, parent: int) -> None:
        # First explorer wins; the tree is private to one query.
        if child not in self.parent:
            self.parent[child] = parent
            self.depth[child] = self.depth[parent] + 1

    def add_root(self, root: int) -> None:
        self.parent[root] = None
        self.depth[root] = 0


@dataclass
class SearchResult:
    best: list[tuple[int, float]]
    visited: list[int]
    tree: SearchTree


def _beam_search(
    arena: SlotArena,
    q: np.ndarray,
    L: int,
    start_ids: Sequence[int],
    metric: Metric,
    *,
    params: Optional[IndexParams] = None,
    clean: bool = False,
    performance_sensitive: bool = False,
    bridge_cfg: Optional["bridge_mod.BridgeConfig"] = None,
    pinned: frozenset[int] = frozenset(),
    live_count: Optional[int] = None,
) -> SearchResult:
    q = np.asarray(q, dtype=np.float64)
    tree = SearchTree()
    pool: list[tuple[float, int]] = []  # sorted ascending, len <= L
    seen: set[int] = set()
    visited: list[int] = []
    visited_set: set[int] = set()

    status = arena.status
    vectors = arena.vectors

    starts = [s for s in start_ids if status[s] != _EMPTY]
    if starts:
        dists = distances_to(q, vectors[np.asarray(starts)], metric)
        for d, s in sorted(zip(dists, starts), key=lambda t: (t[0], t[1])):
            if s in seen:
                continue
            seen.add(s)
            tree.add_root(s)
            bisect.insort(pool, (float(d), s))
        del pool[L:]

    # Index of the first pool entry that might still be unvisited; entries
    # inserted below it rewind the scan, so no visited entry is skipped.
    lo = 0
    while True:
        w = None
        while lo < len(pool):
            i = pool[lo][1]
            if i not in visited_set:
                w = i
                break
            lo += 1
        if w is None:
            break
        visited_set.add(w)
        visited.append(w)

        if clean and arena.is_tombstoned(w) and w not in pinned:
            with arena.h_lock(w):
                h = arena.h_get(w)
                if h is not None and h >= params.C:
                    arena.mark_replaceable(w)

        nbrs = arena.neighbors_snapshot(w)
        new = [u for u in nbrs if u not in seen]
        if new:
            ids_arr = np.asarray(new)
            st = status[ids_arr]
            if (st == _EMPTY).any():
                new = [u for u, s in zip(new, st) if s != _EMPTY]
                ids_arr = np.asarray(new)
        if new:
            # Everything in ``new`` is unseen, so it is also absent from the
            # tree: bulk-record with ``w`` as parent (first explorer wins).
            seen.update(new)
            child_depth = tree.depth[w] + 1
            parent, depth = tree.parent, tree.depth
            for u in new:
                parent[u] = w
                depth[u] = child_depth
            tombs = arena.tombstone_bits[ids_arr] if clean else None
            if metric is Metric.L2:
                diff = vectors[ids_arr] - q
                dists = np.einsum("ij,ij->i", diff, diff)
            else:
                dists = distances_to(q, vectors[ids_arr], metric)
            for j in np.lexsort((ids_arr, dists)):
                if clean and performance_sensitive and tombs[j]:
                    continue  # traversed but never enters the beam
                d = float(dists[j])
                u = new[j]
                if len(pool) < L or (d, u) < pool[-1]:
                    p = bisect.bisect(pool, (d, u))
                    pool.insert(p, (d, u))
                    del pool[L:]
                    if p < lo:
                        lo = p
            if clean and tombs.any() and not arena.is_tombstoned(w):
                clean_consolidate(arena, params, w)

    if clean and not performance_sensitive and bridge_cfg is not None and bridge_cfg.enabled:
        bridge_mod.guided_bridge_build(arena, params, tree, bridge_cfg, live_count=live_count)

    best = [(i, d) for d, i in pool]
    return SearchResult(best=best, visited=visited, tree=tree)


def greedy_beam_search(
    arena: SlotArena,
    q: np.ndarray,
    L: int,
    start_ids: Sequence[int],
    metric: Optional[Metric] = None,
) -> SearchResult:
    """Baseline best-first search; no maintenance side effects."""
    return _beam_search(arena, q, L, start_ids, metric or arena.metric)


def clean_dynamic_beam_search(
    arena: SlotArena,
    params: IndexParams,
    q: np.ndarray,
    L: int,
    start_ids: Sequence[int],
    performance_sensitive: bool,
    bridge_cfg: Optional["bridge_mod.BridgeConfig"] = None,
    pinned: frozenset[int] = frozenset(),
    live_count: Optional[int] = None,
) -> SearchResult:
    """Beam search with on-the-fly consolidation and semi-lazy cleaning.

    Performance-sensitive queries still consolidate, but skip adding
    tombstones to the beam and skip bridge building.
    """
    return _beam_search(
        arena,
        q,
        L,
        start_ids,
        params.metric,
        params=params,
        clean=True,
        performance_sensitive=performance_sensitive,
        bridge_cfg=bridge_cfg,
        pinned=pinned,
        live_count=live_count,
    )
