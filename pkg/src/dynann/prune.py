"""Alpha-RNG neighbor selection and bounded neighbor insertion.

``robust_prune`` keeps, greedily by distance, candidates that are not
alpha-dominated by an already-selected neighbor: once ``p`` is selected,
any remaining candidate ``p'`` with ``alpha * d(p', p) < d(p', v)`` is
discarded. Ties on distance break toward the lower node id, which makes the
whole trace deterministic.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .graph import SlotArena, SlotStatus
from .metrics import Metric, distances_to


_EMPTY = int(SlotStatus.EMPTY)


def _clean_candidates(arena: SlotArena, v: int, candidates: Iterable[int]) -> list[int]:
    # Dedupe preserving order; drop self and Empty slots (stale edges).
    uniq = list(dict.fromkeys(candidates))
    if not uniq:
        return []
    statuses = arena.status[np.asarray(uniq, dtype=np.int64)]
    return [int(c) for c, st in zip(uniq, statuses) if st != _EMPTY and c != v]


def robust_prune(
    arena: SlotArena,
    v: int,
    candidates: Iterable[int],
    alpha: float,
    R: int,
    metric: Metric | None = None,
) -> list[int]:
    """Select at most ``R`` out-neighbors for ``v`` from ``candidates``.

    If at most ``R`` candidates remain after deduplication they are returned
    unchanged. Tombstoned candidates are allowed; liveness filtering is the
    caller's concern.
    """
    metric = metric or arena.metric
    cands = _clean_candidates(arena, v, candidates)
    if len(cands) <= R:
        return cands

    ids = np.asarray(cands, dtype=np.int64)
    vec_v = arena.vectors[v]
    d_to_v = distances_to(vec_v, arena.vectors[ids], metric)
    # Selection order: ascending (distance, id).
    order = np.lexsort((ids, d_to_v))
    alive = np.ones(len(ids), dtype=bool)
    selected: list[int] = []
    for i in order:
        if not alive[i]:
            continue
        alive[i] = False
        p = int(ids[i])
        selected.append(p)
        if len(selected) >= R:
            break
        rest = np.nonzero(alive)[0]
        if rest.size == 0:
            break
        d_to_p = distances_to(arena.vectors[p], arena.vectors[ids[rest]], metric)
        alive[rest[alpha * d_to_p < d_to_v[rest]]] = False
    return selected


def add_neighbors(
    arena: SlotArena,
    v: int,
    new: Iterable[int],
    alpha: float,
    R: int,
    metric: Metric | None = None,
) -> None:
    """Merge ``new`` into ``N(v)``, pruning when the degree bound is reached.

    The whole read-modify-write happens under ``v``'s exclusive adjacency
    lock.
    """
    with arena.adj_write_lock(v):
        merged = _clean_candidates(arena, v, list(arena.neighbors_snapshot(v)) + list(new))
        if len(merged) < R:
            arena.set_neighbors_locked(v, merged)
        else:
            arena.set_neighbors_locked(v, robust_prune(arena, v, merged, alpha, R, metric))
