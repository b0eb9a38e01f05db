"""Concurrent, fully dynamic in-memory graph index for approximate
nearest-neighbor search, with guided bridge building, on-the-fly
neighborhood consolidation, and semi-lazy memory cleaning."""

from .bridge import BridgeConfig, default_depth_set
from .estimator import GraphNearestNeighbors
from .graph import (
    CapacityExhaustedError,
    IndexParams,
    InvariantViolationError,
    SlotArena,
    SlotStatus,
)
from .index import DynamicIndex, EngineMode, build_static
from .metrics import Metric, distance
from .oracle import exact_knn, recall
from .workload import RoundMetrics, WorkloadConfig, run_sliding_window

__all__ = [
    "BridgeConfig",
    "CapacityExhaustedError",
    "DynamicIndex",
    "EngineMode",
    "GraphNearestNeighbors",
    "IndexParams",
    "InvariantViolationError",
    "Metric",
    "RoundMetrics",
    "SlotArena",
    "SlotStatus",
    "WorkloadConfig",
    "build_static",
    "default_depth_set",
    "distance",
    "exact_knn",
    "recall",
    "run_sliding_window",
]

__version__ = "0.1.0"
