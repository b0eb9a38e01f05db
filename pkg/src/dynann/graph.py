"""Slot-arena storage: vectors, adjacency lists, and node lifecycle state.

The arena has a fixed capacity chosen at construction. Each slot moves
through the lifecycle Empty -> Live -> Tombstoned -> Replaceable -> Live
(reuse). A tombstoned slot keeps its vector and out-edges so searches can
still navigate through it; once it has been consolidated enough times
(tracked by the per-node counter ``H``) and then explored once more, it is
marked replaceable and may represent a new data point. Stale incoming edges
to a reused slot are deliberately left in place (semi-lazy cleaning); edges
to a slot that is Empty are skipped at traversal time.

Locking:

* one reader-writer lock per slot protecting its adjacency list,
* one exclusive lock per slot protecting its ``H`` entry and lifecycle bits,
* one exclusive allocation lock covering the free list and the replaceable
  set; ``acquire_slot`` and ``mark_replaceable`` both take it, which
  serializes data-point additions and deletions.

Adjacency lists are stored as immutable tuples and replaced wholesale under
the write lock, so internal hot paths may take a snapshot without locking
(a reference read is atomic) while the public ``read_neighbors`` contract
still goes through the shared lock.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Optional, Sequence

import numpy as np

from .locks import ReadWriteLock
from .metrics import Metric


class SlotStatus(IntEnum):
    EMPTY = 0
    LIVE = 1
    TOMBSTONED = 2
    REPLACEABLE = 3


class CapacityExhaustedError(RuntimeError):
    """No Empty or Replaceable slot is available."""


class InvariantViolationError(ValueError):
    """An operation would break a slot invariant (degree bound, self-loop, ...)."""


REUSE_FRESH_FIRST = "fresh-first"
REUSE_REUSED_FIRST = "reused-first"


@dataclass
class IndexParams:
    """Hyperparameters shared across the index.

    ``R`` bounds each out-neighborhood, ``L``/``L_I`` are the search and
    insert beam widths, ``alpha`` is the pruning sparsity factor, ``C`` is
    the eagerness threshold (consolidations a tombstone must receive before
    its slot becomes replaceable), and ``S`` is the optional fixed set of
    search-tree depths for bridge building (``None`` = derive from the
    current index size).
    """

    dim: int
    R: int = 64
    L: int = 75
    L_I: int = 64
    alpha: float = 1.2
    C: int = 7
    S: Optional[frozenset[int]] = None
    metric: Metric = Metric.L2
    capacity: int = 0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise InvariantViolationError("dim must be >= 1")
        if self.R < 1 or self.L < 1 or self.L_I < 1:
            raise InvariantViolationError("R, L and L_I must be >= 1")
        if self.alpha < 1.0:
            raise InvariantViolationError("alpha must be >= 1.0")
        if self.C < 0:
            raise InvariantViolationError("C must be >= 0")
        if self.S is not None:
            self.S = frozenset(int(s) for s in self.S)
            if any(s < 1 for s in self.S):
                raise InvariantViolationError("bridge depths must be >= 1")
        if self.capacity < 0:
            raise InvariantViolationError("capacity must be >= 0")


@dataclass
class ArenaStats:
    live: int
    tombstoned: int
    replaceable: int
    edges: int
    peak_slots: int


class SlotArena:
    """Fixed-capacity slot arena holding vectors, adjacency and lifecycle state."""

    def __init__(
        self,
        dim: int,
        capacity: int,
        R: int,
        metric: Metric = Metric.L2,
        reuse_priority: str = REUSE_FRESH_FIRST,
    ) -> None:
        if capacity < 1:
            raise InvariantViolationError("capacity must be >= 1")
        if reuse_priority not in (REUSE_FRESH_FIRST, REUSE_REUSED_FIRST):
            raise InvariantViolationError(f"unknown reuse priority {reuse_priority!r}")
        self.dim = dim
        self.capacity = capacity
        self.R = R
        self.metric = metric
        self.reuse_priority = reuse_priority

        # float64 storage: internal distance math runs in float64, so this
        # avoids a conversion on every neighborhood expansion.
        self.vectors = np.zeros((capacity, dim), dtype=np.float64)
        self.status = np.zeros(capacity, dtype=np.uint8)
        self.tombstone_bits = np.zeros(capacity, dtype=bool)
        self._neighbors: list[tuple[int, ...]] = [()] * capacity
        self._h: list[Optional[int]] = [None] * capacity

        self._adj_locks = [ReadWriteLock() for _ in range(capacity)]
        self._h_locks = [threading.Lock() for _ in range(capacity)]
        self._alloc_lock = threading.Lock()
        self._next_fresh = 0
        self._recycled: list[int] = []
        self.replaceable_set: set[int] = set()
        self.pinned: set[int] = set()
        self._allocated = 0
        self.peak_slots = 0

    # -- allocation ---------------------------------------------------------

    def acquire_slot(self, vector: Optional[np.ndarray] = None) -> tuple[int, tuple[int, ...]]:
        """Claim a slot for a new data point.

        Returns ``(node_id, retained_old_neighbors)``. For a reused slot the
        old out-neighbor list is retained so the caller can merge it into the
        new node's candidate set; stale incoming edges are left untouched.
        """
        if vector is not None:
            vector = np.asarray(vector, dtype=np.float64)
            if vector.shape != (self.dim,):
                raise InvariantViolationError(
                    f"vector dimension {vector.shape} does not match arena dim {self.dim}"
                )
        with self._alloc_lock:
            order = (
                (self._pop_empty, self._pop_replaceable)
                if self.reuse_priority == REUSE_FRESH_FIRST
                else (self._pop_replaceable, self._pop_empty)
            )
            v = None
            for pop in order:
                v = pop()
                if v is not None:
                    break
            if v is None:
                raise CapacityExhaustedError("slot arena is full")
            old = self._neighbors[v]
            if vector is not None:
                self.vectors[v] = vector
            with self._h_locks[v]:
                self._h[v] = None
                self.tombstone_bits[v] = False
                self.status[v] = SlotStatus.LIVE
            self._allocated += 1
            if self._allocated > self.peak_slots:
                self.peak_slots = self._allocated
            return v, old

    def _pop_empty(self) -> Optional[int]:
        if self._recycled:
            return self._recycled.pop()
        while self._next_fresh < self.capacity:
            v = self._next_fresh
            self._next_fresh += 1
            if v not in self.pinned:
                return v
        return None

    def _pop_replaceable(self) -> Optional[int]:
        if not self.replaceable_set:
            return None
        v = min(self.replaceable_set)  # deterministic choice
        self.replaceable_set.discard(v)
        return v

    def release_slot(self, v: int) -> None:
        """Return a slot to the Empty pool (used by global consolidation)."""
        if v in self.pinned:
            return
        with self._alloc_lock:
            with self._h_locks[v]:
                self._h[v] = None
                self.tombstone_bits[v] = False
                self.status[v] = SlotStatus.EMPTY
            with self._adj_locks[v].write_lock():
                self._neighbors[v] = ()
            self.replaceable_set.discard(v)
            self._recycled.append(v)
            self._allocated -= 1

    # -- lifecycle ----------------------------------------------------------

    def tombstone(self, v: int) -> int:
        """Mark a live slot deleted: set its tombstone bit and ``H(v) = 0``.

        O(1): touches exactly one slot's lifecycle entry. Returns the number
        of slots touched (always 1) for instrumentation.
        """
        with self._h_locks[v]:
            if self.status[v] != SlotStatus.LIVE:
                raise InvariantViolationError(f"delete on non-live node {v}")
            self.tombstone_bits[v] = True
            self.status[v] = SlotStatus.TOMBSTONED
            self._h[v] = 0
        return 1

    def mark_replaceable(self, v: int) -> None:
        """Move a sufficiently-consolidated tombstone into the replaceable set.

        Caller must hold ``h_lock(v)`` and have checked ``H(v) >= C``.
        """
        if self.status[v] != SlotStatus.TOMBSTONED:
            raise InvariantViolationError(f"mark_replaceable on non-tombstoned node {v}")
        with self._alloc_lock:
            self.replaceable_set.add(v)
        self._h[v] = None
        self.status[v] = SlotStatus.REPLACEABLE

    def h_lock(self, v: int) -> threading.Lock:
        return self._h_locks[v]

    def h_get(self, v: int) -> Optional[int]:
        return self._h[v]

    def h_increment(self, v: int) -> None:
        """Count one consolidation for tombstone ``v``; skipped if ``H`` is absent
        (the slot already turned replaceable or was reused)."""
        with self._h_locks[v]:
            if self._h[v] is not None:
                self._h[v] += 1

    def is_tombstoned(self, v: int) -> bool:
        return bool(self.tombstone_bits[v])

    # -- adjacency ----------------------------------------------------------

    def read_neighbors(self, v: int) -> tuple[int, ...]:
        """Consistent snapshot of ``N(v)`` taken under the shared lock."""
        with self._adj_locks[v].read_lock():
            return self._neighbors[v]

    def neighbors_snapshot(self, v: int) -> tuple[int, ...]:
        """Lock-free snapshot; safe because writes replace the tuple atomically."""
        return self._neighbors[v]

    def _validate_neighbor_list(self, v: int, ids: Sequence[int]) -> tuple[int, ...]:
        ids = tuple(int(u) for u in ids)
        if len(ids) > self.R:
            raise InvariantViolationError(
                f"neighbor list of length {len(ids)} exceeds degree bound R={self.R}"
            )
        if v in ids:
            raise InvariantViolationError(f"neighbor list of {v} contains a self-loop")
        if len(set(ids)) != len(ids):
            raise InvariantViolationError(f"neighbor list of {v} contains duplicates")
        for u in ids:
            if not (0 <= u < self.capacity):
                raise InvariantViolationError(f"neighbor id {u} out of range")
        return ids

    def write_neighbors(self, v: int, ids: Iterable[int]) -> None:
        checked = self._validate_neighbor_list(v, tuple(ids))
        with self._adj_locks[v].write_lock():
            self._neighbors[v] = checked

    def adj_write_lock(self, v: int):
        """Exclusive adjacency lock, for callers doing read-modify-write."""
        return self._adj_locks[v].write_lock()

    def set_neighbors_locked(self, v: int, ids: Iterable[int]) -> None:
        """Replace ``N(v)``; caller must already hold the write lock."""
        self._neighbors[v] = self._validate_neighbor_list(v, tuple(ids))

    # -- queries ------------------------------------------------------------

    def allocated_ids(self) -> list[int]:
        return [v for v in range(self.capacity) if self.status[v] != SlotStatus.EMPTY]

    def live_ids(self) -> list[int]:
        return [v for v in range(self.capacity) if self.status[v] == SlotStatus.LIVE]

    def stats(self) -> ArenaStats:
        counts = np.bincount(self.status, minlength=4)
        edges = sum(len(self._neighbors[v]) for v in range(self.capacity))
        return ArenaStats(
            live=int(counts[SlotStatus.LIVE]),
            tombstoned=int(counts[SlotStatus.TOMBSTONED]),
            replaceable=int(counts[SlotStatus.REPLACEABLE]),
            edges=edges,
            peak_slots=self.peak_slots,
        )

    def check_invariants(self) -> None:
        """Quiescent audit of all slot invariants; raises on violation."""
        for v in range(self.capacity):
            nbrs = self._neighbors[v]
            if len(nbrs) > self.R:
                raise InvariantViolationError(f"|N({v})| = {len(nbrs)} > R")
            if v in nbrs:
                raise InvariantViolationError(f"self-loop at {v}")
            if len(set(nbrs)) != len(nbrs):
                raise InvariantViolationError(f"duplicate neighbors at {v}")
            h = self._h[v]
            st = self.status[v]
            if h is not None and not (st == SlotStatus.TOMBSTONED and self.tombstone_bits[v]):
                raise InvariantViolationError(f"H({v}) present on non-tombstoned slot")
            if v in self.replaceable_set and h is not None:
                raise InvariantViolationError(f"{v} both replaceable and counted")
            if st == SlotStatus.REPLACEABLE and not self.tombstone_bits[v]:
                raise InvariantViolationError(f"replaceable {v} lost its tombstone bit")
