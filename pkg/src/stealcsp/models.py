"""Benchmark problems: n-queens, fixed-length Golomb rulers, Langford pairs.

Variable order matters because the default heuristic branches on the lowest
open index: queens are ordered by row, Golomb marks come before the
differences, Langford positions are grouped by symbol.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .core import (
    MAX_VALUE,
    AllDifferent,
    EqOffset,
    LessThan,
    NeqOffset,
    Problem,
    ProblemError,
    Sum,
    domain_range,
)


def build_queens(n: int) -> Problem:
    """One variable per row holding the queen's column."""
    if not 4 <= n <= MAX_VALUE:
        raise ProblemError(f"queens needs 4 <= n <= {MAX_VALUE}, got {n}")
    cons = []
    for i in range(n):
        for j in range(i + 1, n):
            cons.append(NeqOffset(i, j, 0))
            cons.append(NeqOffset(i, j, j - i))
            cons.append(NeqOffset(i, j, -(j - i)))
    full = domain_range(0, n - 1)
    return Problem(n, (full,) * n, cons, names=tuple(f"q{i}" for i in range(n)))


def golomb_index(m: int) -> dict:
    """Map ``(i, j)`` with ``i < j`` to the index of difference variable d_ij."""
    idx = {}
    pos = m
    for i in range(m):
        for j in range(i + 1, m):
            idx[i, j] = pos
            pos += 1
    return idx


def build_golomb(m: int, length: int) -> Problem:
    """Rulers with ``m`` marks in ``0..length``; all pairwise distances differ.

    Mirror images are cut by requiring the first gap to be shorter than the
    last one.
    """
    if m < 3:
        raise ProblemError("a Golomb ruler needs at least 3 marks")
    if not 0 < length <= MAX_VALUE:
        raise ProblemError(f"ruler length must be in 1..{MAX_VALUE}")
    diff = golomb_index(m)
    n = m + len(diff)
    full = domain_range(0, length)
    initial = [full] * n
    initial[0] = 1  # first mark at 0
    cons = [LessThan(i, i + 1) for i in range(m - 1)]
    for (i, j), d in diff.items():
        cons.append(Sum(i, d, j))
    cons.append(AllDifferent(diff.values()))
    cons.append(LessThan(diff[0, 1], diff[m - 2, m - 1]))
    names = [f"m{i}" for i in range(m)] + [f"d{i}_{j}" for (i, j) in diff]
    return Problem(n, tuple(initial), cons, names=tuple(names))


def langford_index(k: int, n: int, s: int, o: int) -> int:
    """Variable index of occurrence ``o`` of symbol ``s`` (1-based symbols)."""
    return (s - 1) * k + o


def build_langford(k: int, n: int, symmetry: bool = True) -> Problem:
    """``k`` copies of each symbol ``1..n``; consecutive copies of ``s`` are
    ``s + 1`` positions apart.

    With ``symmetry`` an extra fixed variable bounds the first position of
    symbol ``n`` so that it does not lie after its mirrored counterpart.
    Sequences whose symbol-``n`` block is its own mirror image are kept
    together with their mirror.
    """
    if k < 2 or n < 1:
        raise ProblemError("langford needs k >= 2 and n >= 1")
    size = k * n
    if size - 1 > MAX_VALUE:
        raise ProblemError(f"langford({k},{n}) needs positions beyond {MAX_VALUE}")
    full = domain_range(0, size - 1)
    nvars = size
    cons = []
    for s in range(1, n + 1):
        for o in range(k - 1):
            cons.append(EqOffset(langford_index(k, n, s, o + 1), langford_index(k, n, s, o), s + 1))
    cons.append(AllDifferent(range(size)))
    initial = [full] * size
    names = [f"p{s}_{o}" for s in range(1, n + 1) for o in range(k)]
    if symmetry:
        # mirror of the first copy of n sits at size-1-first-(k-1)(n+1)
        span = size - 1 - (k - 1) * (n + 1)
        bound = span // 2 + 1
        if bound > MAX_VALUE:
            raise ProblemError("symmetry bound outside the value range")
        bound = max(bound, 0)  # negative span: symbol n cannot fit at all
        initial.append(1 << bound)
        names.append("bound")
        cons.append(LessThan(langford_index(k, n, n, 0), nvars))
        nvars += 1
    return Problem(nvars, tuple(initial), cons, names=tuple(names))


def langford_sequence(values, k: int, n: int) -> list[int]:
    """Rebuild the symbol sequence from a solution's position values."""
    seq = [0] * (k * n)
    for s in range(1, n + 1):
        for o in range(k):
            seq[values[langford_index(k, n, s, o)]] = s
    return seq


@dataclass(frozen=True)
class ModelSpec:
    """A named benchmark instance that can be rebuilt anywhere (CLI, child
    processes)."""
    kind: str
    params: dict = field(default_factory=dict)

    def build(self) -> Problem:
        p = self.params
        if self.kind == "queens":
            return build_queens(p["n"])
        if self.kind == "golomb":
            return build_golomb(p["marks"], p["length"])
        if self.kind == "langford":
            return build_langford(p["k"], p["n"], p.get("symmetry", True))
        raise ProblemError(f"unknown model {self.kind!r}")

    def label(self) -> str:
        if self.kind == "queens":
            return f"queens-{self.params['n']}"
        if self.kind == "golomb":
            return f"golomb-{self.params['marks']}-{self.params['length']}"
        return f"langford-{self.params['k']}-{self.params['n']}"

    def as_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(d["kind"], dict(d["params"]))


def queens(n):
    return ModelSpec("queens", {"n": n})


def golomb(marks, length):
    return ModelSpec("golomb", {"marks": marks, "length": length})


def langford(k, n, symmetry=True):
    return ModelSpec("langford", {"k": k, "n": n, "symmetry": symmetry})
