"""Guided bridge building: linking search-tree cousins at configured depths.

After a beam search records its search tree, every ordered pair of tree
nodes whose depths are in the configured depth set (and which passes the
heuristic predicate) is tentatively linked through ``add_neighbors``; both
orderings of a pair yield the bi-directional bridge, and local pruning keeps
the degree bound. Pair enumeration is deterministic and capped so a single
query's bridge work stays bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, TYPE_CHECKING

import numpy as np

from .graph import IndexParams, SlotArena, SlotStatus
from .prune import add_neighbors

if TYPE_CHECKING:
    from .search import SearchTree

PREDICATE_SAME_DEPTH = "same-depth"
PREDICATE_ALL = "all"


@dataclass
class BridgeConfig:
    """Configuration for guided bridge building.

    ``S`` is the set of search-tree depths considered; ``None`` derives it
    from the current index size (see ``default_depth_set``).
    """

    S: Optional[frozenset[int]] = None
    predicate: str = PREDICATE_SAME_DEPTH
    max_pairs_per_query: int = 256
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.predicate not in (PREDICATE_SAME_DEPTH, PREDICATE_ALL):
            raise ValueError(f"unknown bridge predicate {self.predicate!r}")
        if self.S is not None:
            self.S = frozenset(int(s) for s in self.S)
            if self.enabled and not self.S:
                raise ValueError("bridge depth set must be nonempty when enabled")
            if any(s < 1 for s in self.S):
                raise ValueError("bridge depths must be >= 1")


def default_depth_set(n: int) -> frozenset[int]:
    """Depths ``{floor(log2 n) + 2, +3, +4}`` for an index of ``n`` points."""
    if n < 1:
        raise ValueError("index size must be >= 1")
    base = int(math.floor(math.log2(n)))
    return frozenset({base + 2, base + 3, base + 4})


def heuristic_predicate(v: int, w: int, tree: "SearchTree", cfg: BridgeConfig) -> bool:
    if cfg.predicate == PREDICATE_ALL:
        return True
    return tree.depth[v] == tree.depth[w]


def guided_bridge_build(
    arena: SlotArena,
    params: IndexParams,
    tree: "SearchTree",
    cfg: BridgeConfig,
    live_count: Optional[int] = None,
) -> int:
    """Add bridge edges among tree nodes at the configured depths.

    Returns the number of ``add_neighbors`` calls made. Nodes deleted or
    reused concurrently are skipped. Pairs are enumerated in ascending
    ``(depth, source id, target id)`` order and the enumeration stops after
    ``max_pairs_per_query`` calls.
    """
    if not cfg.enabled:
        return 0
    depths = cfg.S
    if depths is None:
        if live_count is None:
            live_count = max(1, int(np.count_nonzero(arena.status == SlotStatus.LIVE)))
        depths = default_depth_set(live_count)

    in_scope = sorted(
        (v for v in tree.depth if tree.depth[v] in depths),
        key=lambda v: (tree.depth[v], v),
    )
    if len(in_scope) < 2:
        return 0

    made = 0
    if cfg.predicate == PREDICATE_SAME_DEPTH:
        # Linear bucketing: only same-depth pairs can pass the predicate.
        buckets: dict[int, list[int]] = {}
        for v in in_scope:
            buckets.setdefault(tree.depth[v], []).append(v)
        pair_iter = (
            (v, w)
            for d in sorted(buckets)
            for v in buckets[d]
            for w in buckets[d]
            if v != w
        )
    else:
        pair_iter = (
            (v, w)
            for v in in_scope
            for w in in_scope
            if v != w and heuristic_predicate(v, w, tree, cfg)
        )

    for v, w in pair_iter:
        if made >= cfg.max_pairs_per_query:
            break
        if arena.status[v] != SlotStatus.LIVE or arena.status[w] != SlotStatus.LIVE:
            continue
        add_neighbors(arena, v, (w,), params.alpha, params.R, params.metric)
        made += 1
    return made
