"""Neighborhood consolidation around tombstones.

``consolidate`` rebuilds a live node's out-neighborhood from its live
neighbors plus the live out-neighbors of each tombstoned neighbor, dropping
the tombstones themselves. ``clean_consolidate`` additionally counts the
consolidation on every tombstoned neighbor's ``H`` entry; once a tombstone
has been counted ``C`` times it becomes eligible for slot reuse.

``global_consolidate_baseline`` is the periodic global cleaning pass used by
the FreshVamana-style baseline: consolidate every live node, then purge all
tombstoned slots. It locks node by node rather than stopping the world, so
its cost under concurrency is observable.
"""

from __future__ import annotations

from .graph import IndexParams, SlotArena, SlotStatus
from .prune import _clean_candidates, robust_prune


def consolidate(arena: SlotArena, params: IndexParams, v: int) -> None:
    """Rebuild ``N(v)`` absorbing the live out-neighbors of tombstoned neighbors.

    Gathering depth is exactly one: only ``N(w)`` of a tombstoned direct
    neighbor ``w`` is considered, never the transitive closure. Runs under
    ``v``'s exclusive adjacency lock; neighbor lists of other nodes are read
    via atomic snapshots, so no second lock is held.
    """
    with arena.adj_write_lock(v):
        _consolidate_locked(arena, params, v)


def _consolidate_locked(arena: SlotArena, params: IndexParams, v: int) -> None:
    cands: list[int] = []
    for w in arena.neighbors_snapshot(v):
        st = arena.status[w]
        if st == SlotStatus.LIVE:
            cands.append(w)
        elif st in (SlotStatus.TOMBSTONED, SlotStatus.REPLACEABLE):
            cands.extend(
                u
                for u in arena.neighbors_snapshot(w)
                if u != v and arena.status[u] == SlotStatus.LIVE
            )
        # Empty neighbors are stale edges; drop them.
    cands = _clean_candidates(arena, v, cands)
    if len(cands) < params.R:
        arena.set_neighbors_locked(v, cands)
    else:
        arena.set_neighbors_locked(
            v, robust_prune(arena, v, cands, params.alpha, params.R, params.metric)
        )


def clean_consolidate(arena: SlotArena, params: IndexParams, v: int) -> None:
    """Consolidate ``v`` and count the consolidation on its tombstoned neighbors.

    The tombstone set is snapshotted before the rebuild (which removes those
    edges). Increments are skipped for tombstones whose ``H`` entry is
    already absent (they turned replaceable or were reused concurrently).
    """
    with arena.adj_write_lock(v):
        snapshot = [
            w for w in arena.neighbors_snapshot(v) if arena.is_tombstoned(w)
        ]
        _consolidate_locked(arena, params, v)
    for w in snapshot:
        arena.h_increment(w)


def global_consolidate_baseline(arena: SlotArena, params: IndexParams) -> None:
    """Consolidate every live node, then purge every tombstoned slot."""
    for v in range(arena.capacity):
        if arena.status[v] == SlotStatus.LIVE:
            consolidate(arena, params, v)
    for v in range(arena.capacity):
        if arena.status[v] in (SlotStatus.TOMBSTONED, SlotStatus.REPLACEABLE):
            arena.release_slot(v)
