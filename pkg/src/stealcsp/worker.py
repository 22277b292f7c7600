"""Search workers: depth-first splitting over a deque pool, no backtracking.

A worker keeps one current store and a pool of idle ones.  Each step picks a
variable, keeps the branch ``var = v`` as current and pushes ``var != v`` on
its pool.  When the current store fails it pops from its own pool; when the
pool is empty it steals the oldest entry from the teammate with the biggest
pool.

Pool discipline: the owner appends and removes at the tail; a removal only
takes the pool lock while fewer than ``safe_size`` entries remain.  Thieves
serialize on the team-wide stealing lock, then lock the victim pool and take
its head only if it still holds ``threshold`` entries.
"""
from __future__ import annotations

import enum
import math
import struct
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .core import Store, domain_size
from .propagation import Engine


class VarHeuristic(enum.Enum):
    LEX_FIRST = "lex-first"
    MIN_DOMAIN = "min-domain"


class ValueHeuristic(enum.Enum):
    MIN_VALUE = "min-value"


class Outcome(enum.Enum):
    EXHAUSTED = "exhausted"  # pool_get failed: no work left in the team
    FOUND = "found"          # FIRST mode: a solution was emitted
    STOPPED = "stopped"      # the stop flag was raised


class Mode(enum.Enum):
    FIRST = "first"
    ALL = "all"


@dataclass(frozen=True)
class WorkerConfig:
    safe_size: int = 4
    threshold: float = 2  # math.inf disables stealing
    variable: VarHeuristic = VarHeuristic.LEX_FIRST
    value: ValueHeuristic = ValueHeuristic.MIN_VALUE

    def __post_init__(self):
        object.__setattr__(self, "variable", VarHeuristic(self.variable))
        object.__setattr__(self, "value", ValueHeuristic(self.value))
        if self.threshold < 1:
            raise ValueError("threshold must be at least 1")
        if self.safe_size < 1:
            raise ValueError("safe_size must be at least 1")
        if not math.isinf(self.threshold) and self.safe_size < self.threshold:
            raise ValueError("safe_size must not be below threshold")


@dataclass
class SearchStats:
    nodes: int = 0
    splits: int = 0
    steals_attempted: int = 0
    steals_succeeded: int = 0
    solutions: int = 0
    owner_locks: int = 0
    subtree_nodes: dict = field(default_factory=dict)

    def merge(self, other: "SearchStats") -> None:
        self.nodes += other.nodes
        self.splits += other.splits
        self.steals_attempted += other.steals_attempted
        self.steals_succeeded += other.steals_succeeded
        self.solutions += other.solutions
        self.owner_locks += other.owner_locks
        for k, v in other.subtree_nodes.items():
            self.subtree_nodes[k] = self.subtree_nodes.get(k, 0) + v

    def as_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "splits": self.splits,
            "steals_attempted": self.steals_attempted,
            "steals_succeeded": self.steals_succeeded,
            "solutions": self.solutions,
            "owner_locks": self.owner_locks,
            "subtree_nodes": {str(k): v for k, v in sorted(self.subtree_nodes.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchStats":
        d = dict(d)
        d["subtree_nodes"] = {int(k): v for k, v in d.get("subtree_nodes", {}).items()}
        return cls(**d)


def select_variable(s: Sequence[int], heuristic=VarHeuristic.LEX_FIRST) -> Optional[int]:
    """Index of the variable to branch on, or ``None`` for a solved store."""
    if heuristic is VarHeuristic.LEX_FIRST:
        for i, d in enumerate(s):
            if d & (d - 1):
                return i
        return None
    best, best_size = None, 65
    for i, d in enumerate(s):
        if d & (d - 1):
            size = domain_size(d)
            if size < best_size:
                best, best_size = i, size
                if size == 2:
                    break
    return best


def split_search_space(var: int, s: Sequence[int], value=ValueHeuristic.MIN_VALUE) -> tuple[Store, Store]:
    """``(s with var = v, s with v removed from var)`` for the chosen ``v``."""
    d = s[var]
    if not d & (d - 1):
        raise ValueError(f"variable {var} has fewer than two values")
    low = d & -d
    current = list(s)
    current[var] = low
    other = list(s)
    other[var] = d ^ low
    return tuple(current), tuple(other)


# -- pools ------------------------------------------------------------------

class Pool:
    """Deque of ``(store, var)`` entries for workers running as threads."""

    def __init__(self, owner: int = 0):
        self.owner = owner
        self.entries = deque()
        self.lock = threading.Lock()

    @property
    def size(self) -> int:
        return len(self.entries)

    def append(self, store, var) -> None:
        self.entries.append((store, var))

    def remove_last(self):
        try:
            return self.entries.pop()
        except IndexError:
            return None

    remove_last_unlocked = remove_last

    def remove_first(self):
        try:
            return self.entries.popleft()
        except IndexError:
            return None

    def snapshot(self) -> list:
        return list(self.entries)


class SharedPool:
    """Ring-buffer pool in shared memory, for workers running as processes.

    Slots are ``n + 1`` unsigned 64-bit words: the store masks and the split
    variable.  Only the owner writes ``tail`` and only a thief holding the
    stealing lock writes ``head``.  ``capacity`` must bound the pool size;
    depth-first splitting never holds more entries than the total number of
    removable values of the root store.
    """

    def __init__(self, n: int, capacity: int, ctx, owner: int = 0):
        self.owner = owner
        self.n = n
        self.capacity = capacity
        self._fmt = struct.Struct(f"<{n + 1}Q")
        self.buf = ctx.RawArray("B", capacity * self._fmt.size)
        self.idx = ctx.RawArray("q", 2)
        self.lock = ctx.Lock()

    def __getstate__(self):
        state = dict(self.__dict__)
        del state["_fmt"]
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._fmt = struct.Struct(f"<{self.n + 1}Q")

    @property
    def size(self) -> int:
        return self.idx[1] - self.idx[0]

    def append(self, store, var) -> None:
        idx = self.idx
        tail = idx[1]
        if tail - idx[0] >= self.capacity:
            raise OverflowError("shared pool capacity exceeded")
        self._fmt.pack_into(self.buf, (tail % self.capacity) * self._fmt.size, *store, var)
        idx[1] = tail + 1

    def _read(self, pos):
        vals = self._fmt.unpack_from(self.buf, (pos % self.capacity) * self._fmt.size)
        return vals[:-1], vals[-1]

    def remove_last(self):
        """Tail removal; the caller holds ``self.lock``."""
        idx = self.idx
        tail = idx[1] - 1
        if tail < idx[0]:
            return None
        idx[1] = tail
        return self._read(tail)

    def remove_last_unlocked(self):
        """Tail removal racing thieves: reserve, then back off to the lock if
        a thief reserved the same slot."""
        idx = self.idx
        tail = idx[1] - 1
        idx[1] = tail
        if idx[0] > tail:
            idx[1] = tail + 1
            with self.lock:
                return self.remove_last()
        return self._read(tail)

    def remove_first(self):
        """Head removal; the caller holds ``self.lock``."""
        idx = self.idx
        head = idx[0]
        idx[0] = head + 1
        if head + 1 > idx[1]:
            idx[0] = head
            return None
        return self._read(head)

    def snapshot(self) -> list:
        head, tail = self.idx[0], self.idx[1]
        return [self._read(p) for p in range(head, tail)]


class TeamPools:
    """The pools of one team plus the team-wide stealing lock."""

    def __init__(self, pools: Sequence, stealing_lock=None):
        self.pools = list(pools)
        self.stealing_lock = stealing_lock if stealing_lock is not None else threading.Lock()

    @classmethod
    def local(cls, workers: int) -> "TeamPools":
        return cls([Pool(w) for w in range(workers)])

    @classmethod
    def shared(cls, workers: int, n: int, capacity: int, ctx) -> "TeamPools":
        return cls([SharedPool(n, capacity, ctx, w) for w in range(workers)], ctx.Lock())

    def sizes(self) -> list[int]:
        return [p.size for p in self.pools]


def pool_put(pool, store, var) -> None:
    pool.append(store, var)


def steal_work(team: TeamPools, self_id: Optional[int], threshold: float, stats: Optional[SearchStats] = None):
    """Take the head entry of the biggest teammate pool (lowest id on ties).

    ``self_id`` is excluded from the candidates; the controller passes
    ``None``.  Returns ``(store, var)`` or ``None``.
    """
    with team.stealing_lock:
        victim, best = None, -1
        for w, p in enumerate(team.pools):
            if w == self_id:
                continue
            size = p.size
            if size > best:
                victim, best = p, size
        entry = None
        if victim is not None:
            with victim.lock:
                if victim.size >= threshold:
                    entry = victim.remove_first()
    if stats is not None:
        stats.steals_attempted += 1
        if entry is not None:
            stats.steals_succeeded += 1
    return entry


def pool_get(team: TeamPools, self_id: int, config: WorkerConfig, stats: Optional[SearchStats] = None):
    """Owner-side removal: tail of the own pool, or a steal when it is empty."""
    pool = team.pools[self_id]
    size = pool.size
    if size == 0:
        return steal_work(team, self_id, config.threshold, stats)
    if size < config.safe_size:
        with pool.lock:
            if stats is not None:
                stats.owner_locks += 1
            entry = pool.remove_last()
    else:
        entry = pool.remove_last_unlocked()
    if entry is None:
        return steal_work(team, self_id, config.threshold, stats)
    return entry


# -- the search driver --------------------------------------------------------

class Flag:
    """Minimal stop flag for threads; process workers get a shared one."""

    def __init__(self):
        self._set = False

    def set(self):
        self._set = True

    def clear(self):
        self._set = False

    def is_set(self) -> bool:
        return self._set


class SharedFlag:
    def __init__(self, ctx):
        self._v = ctx.RawValue("b", 0)

    def set(self):
        self._v.value = 1

    def clear(self):
        self._v.value = 0

    def is_set(self) -> bool:
        return self._v.value != 0


class Worker:
    """One search agent.  ``emit`` receives each solution store."""

    def __init__(self, wid: int, engine: Engine, team: TeamPools, config: WorkerConfig = WorkerConfig(),
                 mode: Mode = Mode.ALL, emit: Callable = None, stop=None, key_var: Optional[int] = None):
        self.wid = wid
        self.engine = engine
        self.team = team
        self.pool = team.pools[wid]
        self.config = config
        self.mode = Mode(mode)
        self.emit = emit if emit is not None else (lambda store: None)
        self.stop = stop if stop is not None else Flag()
        self.key_var = key_var
        self.stats = SearchStats()
        self.stop_seen_at = None

    def _count(self, store) -> None:
        stats = self.stats
        stats.nodes += 1
        if self.key_var is not None:
            d = store[self.key_var]
            key = (d & -d).bit_length() - 1
            sub = stats.subtree_nodes
            sub[key] = sub.get(key, 0) + 1

    def run(self, store: Optional[Store] = None, seeds=None) -> Outcome:
        gen = self.steps(store, seeds)
        try:
            while True:
                next(gen)
        except StopIteration as done:
            return done.value

    def steps(self, store: Optional[Store] = None, seeds=None):
        """Generator form of the search loop; yields once per search node.

        ``store`` is propagated on ``seeds`` (default: every variable) before
        exploration; ``None`` starts with a pool retrieval instead.
        """
        engine, config, team, wid = self.engine, self.config, self.team, self.wid
        propagate = engine.propagate
        var_h, val_h = config.variable, config.value
        stop = self.stop
        stats = self.stats
        pool = self.pool

        current = None
        if stop.is_set():
            self._saw_stop()
            return Outcome.STOPPED
        if store is not None:
            current = propagate(store, range(len(store)) if seeds is None else seeds)
            self._count(store)
            yield
        while True:
            while current is None:
                if stop.is_set():
                    self._saw_stop()
                    return Outcome.STOPPED
                entry = pool_get(team, wid, config, stats)
                if entry is None:
                    return Outcome.EXHAUSTED
                st, v = entry
                current = propagate(st, (v,))
                self._count(st)
                yield
            if stop.is_set():
                self._saw_stop()
                return Outcome.STOPPED
            var = select_variable(current, var_h)
            if var is None:
                stats.solutions += 1
                self.emit(current)
                if self.mode is Mode.FIRST:
                    return Outcome.FOUND
                current = None
                continue
            node, other = split_search_space(var, current, val_h)
            stats.splits += 1
            pool.append(other, var)
            current = propagate(node, (var,))
            self._count(node)
            yield

    def _saw_stop(self):
        self.stop_seen_at = time.perf_counter()
