"""Parallel finite-domain constraint search with work stealing.

Workers in a team share deque pools of idle stores and steal from each
other; teams exchange work through a small message protocol.
"""
from .core import (
    AllDifferent,
    CodecError,
    EqOffset,
    LessThan,
    NeqOffset,
    Problem,
    ProblemError,
    Sum,
    domain_from_values,
    domain_range,
    domain_values,
    solution_check,
    store_decode,
    store_encode,
)
from .models import ModelSpec, build_golomb, build_langford, build_queens, golomb, langford, queens
from .partition import PartitionError, Strategy, eager_split, even_split, split, verify_partition
from .propagation import FAIL, Engine, propagate, revise_constraint
from .team import Executor, RunReport, RunTimeout, bootstrap_plan, run_in_process, run_spawned
from .worker import Mode, Outcome, SearchStats, Worker, WorkerConfig

__version__ = "0.1.0"

__all__ = [
    "AllDifferent", "CodecError", "EqOffset", "LessThan", "NeqOffset", "Problem", "ProblemError", "Sum",
    "domain_from_values", "domain_range", "domain_values", "solution_check", "store_decode", "store_encode",
    "ModelSpec", "build_golomb", "build_langford", "build_queens", "golomb", "langford", "queens",
    "PartitionError", "Strategy", "eager_split", "even_split", "split", "verify_partition",
    "FAIL", "Engine", "propagate", "revise_constraint",
    "Executor", "RunReport", "RunTimeout", "bootstrap_plan", "run_in_process", "run_spawned",
    "Mode", "Outcome", "SearchStats", "Worker", "WorkerConfig",
]
