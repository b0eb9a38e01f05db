"""Slot arena lifecycle, invariants, and lock behavior."""

import threading

import numpy as np
import pytest

from dynann.graph import (
    CapacityExhaustedError,
    IndexParams,
    InvariantViolationError,
    REUSE_REUSED_FIRST,
    SlotArena,
    SlotStatus,
)


def test_params_validation():
    with pytest.raises(InvariantViolationError):
        IndexParams(dim=0)
    with pytest.raises(InvariantViolationError):
        IndexParams(dim=2, R=0)
    with pytest.raises(InvariantViolationError):
        IndexParams(dim=2, alpha=0.9)
    with pytest.raises(InvariantViolationError):
        IndexParams(dim=2, C=-1)
    with pytest.raises(InvariantViolationError):
        IndexParams(dim=2, S={0, 3})
    p = IndexParams(dim=2, S={2, 3})
    assert p.S == frozenset({2, 3})


def test_acquire_fresh_slot_prefers_empty():
    arena = SlotArena(dim=2, capacity=10, R=4)
    v, old = arena.acquire_slot(np.zeros(2))
    assert v == 0 and old == ()
    assert arena.status[v] == SlotStatus.LIVE
    assert arena.replaceable_set == set()


def _tombstone_to_replaceable(arena: SlotArena, v: int) -> None:
    arena.tombstone(v)
    with arena.h_lock(v):
        arena.mark_replaceable(v)


def test_acquire_forced_replaceable():
    arena = SlotArena(dim=2, capacity=2, R=4)
    a, _ = arena.acquire_slot(np.zeros(2))
    b, _ = arena.acquire_slot(np.ones(2))
    arena.write_neighbors(a, [b])
    _tombstone_to_replaceable(arena, a)
    v, old = arena.acquire_slot(np.full(2, 2.0))
    assert v == a
    assert old == (b,)  # old out-neighbors retained for merge
    assert arena.replaceable_set == set()
    assert arena.status[v] == SlotStatus.LIVE
    assert not arena.tombstone_bits[v]


def test_acquire_exhausted():
    arena = SlotArena(dim=2, capacity=1, R=4)
    arena.acquire_slot(np.zeros(2))
    with pytest.raises(CapacityExhaustedError):
        arena.acquire_slot(np.ones(2))


def test_reused_first_priority():
    arena = SlotArena(dim=2, capacity=3, R=4, reuse_priority=REUSE_REUSED_FIRST)
    a, _ = arena.acquire_slot(np.zeros(2))
    _tombstone_to_replaceable(arena, a)
    v, _ = arena.acquire_slot(np.ones(2))
    assert v == a  # replaceable beats fresh when reused-first


def test_mark_replaceable_clears_h_and_errors_on_live():
    arena = SlotArena(dim=2, capacity=4, R=4)
    v, _ = arena.acquire_slot(np.zeros(2))
    with pytest.raises(InvariantViolationError):
        with arena.h_lock(v):
            arena.mark_replaceable(v)
    arena.tombstone(v)
    assert arena.h_get(v) == 0
    with arena.h_lock(v):
        arena.mark_replaceable(v)
    assert arena.h_get(v) is None
    assert v in arena.replaceable_set
    assert arena.status[v] == SlotStatus.REPLACEABLE
    arena.check_invariants()


def test_tombstone_is_single_touch_and_rejects_double_delete():
    arena = SlotArena(dim=2, capacity=4, R=4)
    v, _ = arena.acquire_slot(np.zeros(2))
    assert arena.tombstone(v) == 1
    with pytest.raises(InvariantViolationError):
        arena.tombstone(v)


def test_write_then_read_neighbors():
    arena = SlotArena(dim=2, capacity=8, R=4)
    ids = [arena.acquire_slot(np.zeros(2))[0] for _ in range(3)]
    arena.write_neighbors(ids[0], [ids[1], ids[2]])
    assert arena.read_neighbors(ids[0]) == (ids[1], ids[2])


def test_write_neighbors_rejects_invalid_lists():
    arena = SlotArena(dim=2, capacity=8, R=2)
    ids = [arena.acquire_slot(np.zeros(2))[0] for _ in range(4)]
    with pytest.raises(InvariantViolationError):
        arena.write_neighbors(ids[0], ids[1:])  # length R+1
    with pytest.raises(InvariantViolationError):
        arena.write_neighbors(ids[0], [ids[0]])  # self-loop
    with pytest.raises(InvariantViolationError):
        arena.write_neighbors(ids[0], [ids[1], ids[1]])  # duplicate
    with pytest.raises(InvariantViolationError):
        arena.write_neighbors(ids[0], [999])  # out of range


def test_vector_dimension_checked():
    arena = SlotArena(dim=3, capacity=2, R=4)
    with pytest.raises(InvariantViolationError):
        arena.acquire_slot(np.zeros(2))


def test_concurrent_readers_see_old_or_new_list():
    """Stress: every observed neighbor list equals some written list."""
    arena = SlotArena(dim=2, capacity=70, R=64)
    ids = [arena.acquire_slot(np.zeros(2))[0] for _ in range(65)]
    v = ids[0]
    written = [tuple(ids[1:1 + n]) for n in range(0, 65, 8)]
    valid = set(written) | {()}
    stop = threading.Event()
    bad: list[tuple] = []

    def reader():
        while not stop.is_set():
            snap = arena.read_neighbors(v)
            if snap not in valid:
                bad.append(snap)
                return

    def writer():
        for _ in range(300):
            for lst in written:
                arena.write_neighbors(v, lst)

    readers = [threading.Thread(target=reader) for _ in range(4)]
    for t in readers:
        t.start()
    w = threading.Thread(target=writer)
    w.start()
    w.join()
    stop.set()
    for t in readers:
        t.join()
    assert bad == []


def test_release_slot_returns_to_empty_pool():
    arena = SlotArena(dim=2, capacity=2, R=4)
    a, _ = arena.acquire_slot(np.zeros(2))
    b, _ = arena.acquire_slot(np.ones(2))
    arena.write_neighbors(a, [b])
    arena.tombstone(a)
    arena.release_slot(a)
    assert arena.status[a] == SlotStatus.EMPTY
    assert arena.neighbors_snapshot(a) == ()
    v, old = arena.acquire_slot(np.full(2, 3.0))
    assert v == a and old == ()


def test_release_skips_pinned_start_node():
    arena = SlotArena(dim=2, capacity=2, R=4)
    a, _ = arena.acquire_slot(np.zeros(2))
    arena.pinned.add(a)
    arena.tombstone(a)
    arena.release_slot(a)
    assert arena.status[a] == SlotStatus.TOMBSTONED  # untouched


def test_stats_and_peak_slots():
    arena = SlotArena(dim=2, capacity=8, R=4)
    ids = [arena.acquire_slot(np.zeros(2))[0] for _ in range(4)]
    arena.tombstone(ids[0])
    arena.write_neighbors(ids[1], [ids[2], ids[3]])
    s = arena.stats()
    assert s.live == 3
    assert s.tombstoned == 1
    assert s.replaceable == 0
    assert s.edges == 2
    assert s.peak_slots == 4
    arena.release_slot(ids[0])
    assert arena.stats().peak_slots == 4  # peak is sticky


def test_h_increment_skipped_when_absent():
    arena = SlotArena(dim=2, capacity=4, R=4)
    v, _ = arena.acquire_slot(np.zeros(2))
    arena.h_increment(v)  # live node: H absent, silently skipped
    assert arena.h_get(v) is None
    arena.tombstone(v)
    arena.h_increment(v)
    assert arena.h_get(v) == 1
