"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from dynann.graph import SlotArena


def build_arena(coords: dict[str, tuple], edges: dict[str, list[str]], R: int,
                capacity: int = 16) -> tuple[SlotArena, dict[str, int]]:
    """Build a small arena from named 2-D points and a named adjacency map.

    Node ids are assigned in sorted name order so tests stay deterministic.
    """
    dim = len(next(iter(coords.values())))
    arena = SlotArena(dim=dim, capacity=capacity, R=R)
    ids: dict[str, int] = {}
    for name in sorted(coords):
        v, _ = arena.acquire_slot(np.asarray(coords[name], dtype=float))
        ids[name] = v
    for name, nbrs in edges.items():
        arena.write_neighbors(ids[name], [ids[n] for n in nbrs])
    return arena, ids


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
