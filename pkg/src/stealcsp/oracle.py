"""Brute-force reference enumerators.

Nothing here touches the propagation engine: solutions are generated by plain
enumeration and tested by direct constraint evaluation.  They are meant for
small instances and serve as the independent check of the solver.
"""
from __future__ import annotations

import itertools
from typing import Iterator, Sequence

from .core import Problem, Sum, domain_values, solution_check


def enumerate_solutions(problem: Problem, store: Sequence[int] = None) -> Iterator[tuple]:
    """All solutions inside ``store`` (default: the initial store).

    Depth-first generate-and-test in variable order; each constraint is
    evaluated as soon as its whole scope is assigned.
    """
    store = problem.initial if store is None else store
    n = problem.n
    due = [[] for _ in range(n)]
    for c in problem.primitives:
        due[max(c.scope)].append(c)
    values = [domain_values(d) for d in store]
    x = [0] * n

    def rec(i):
        if i == n:
            yield tuple(x)
            return
        for v in values[i]:
            x[i] = v
            if all(c.holds(x) for c in due[i]):
                yield from rec(i + 1)

    for sol in rec(0):
        if solution_check(sol, problem):
            yield sol


def count_solutions(problem: Problem, store: Sequence[int] = None) -> int:
    return sum(1 for _ in enumerate_solutions(problem, store))


def product_tuples(store: Sequence[int]) -> Iterator[tuple]:
    """Every tuple of the store's cross product."""
    return itertools.product(*(domain_values(d) for d in store))


def supported_filter(problem: Problem, store: Sequence[int]):
    """Fixpoint of per-constraint support filtering by enumeration.

    A value survives if every constraint on its variable has a satisfying
    assignment of the constraint's scope using it.  ``Sum`` is filtered on
    its bounds only, to match the consistency level the solver promises for
    it.  Returns the filtered store or ``None`` if a domain empties.
    """
    doms = [set(domain_values(d)) for d in store]
    cons = problem.primitives
    changed = True
    while changed:
        changed = False
        for c in cons:
            if any(not doms[v] for v in c.scope):
                return None
            scope = c.scope
            if isinstance(c, Sum):
                lo = {v: min(doms[v]) for v in scope}
                hi = {v: max(doms[v]) for v in scope}
                boxes = [range(lo[v], hi[v] + 1) for v in scope]
                supported = [set() for _ in scope]
                for t in itertools.product(*boxes):
                    x = dict(zip(scope, t))
                    if x[c.i] + x[c.j] == x[c.k]:
                        for p, v in enumerate(scope):
                            supported[p].add(x[v])
                for p, v in enumerate(scope):
                    keep = {a for a in doms[v] if min(supported[p], default=99) <= a <= max(supported[p], default=-1)}
                    if keep != doms[v]:
                        doms[v] = keep
                        changed = True
                continue
            a, b = scope
            keep_a = set()
            keep_b = set()
            for va in doms[a]:
                for vb in doms[b]:
                    x = [0] * problem.n
                    x[a], x[b] = va, vb
                    if c.holds(x):
                        keep_a.add(va)
                        keep_b.add(vb)
            if keep_a != doms[a] or keep_b != doms[b]:
                doms[a], doms[b] = keep_a, keep_b
                changed = True
        if any(not d for d in doms):
            return None
    return tuple(sum(1 << v for v in d) for d in doms)


# -- model-level enumerators (no constraint encoding at all) -----------------

def queens_solutions(n: int) -> list[tuple]:
    out = []
    for perm in itertools.permutations(range(n)):
        if len({perm[i] + i for i in range(n)}) == n and len({perm[i] - i for i in range(n)}) == n:
            out.append(perm)
    return out


def golomb_rulers(m: int, length: int, break_mirror: bool = True) -> list[tuple]:
    """Rulers ``0 = a_0 < ... < a_{m-1} <= length`` with distinct distances."""
    out = []
    for rest in itertools.combinations(range(1, length + 1), m - 1):
        marks = (0,) + rest
        dists = [b - a for a, b in itertools.combinations(marks, 2)]
        if len(set(dists)) != len(dists):
            continue
        if break_mirror and not marks[1] - marks[0] < marks[-1] - marks[-2]:
            continue
        out.append(marks)
    return out


def langford_sequences(k: int, n: int) -> list[tuple]:
    """All Langford sequences: ``k`` copies of ``1..n``, copies of ``s``
    separated by ``s`` other symbols."""
    size = k * n
    out = []
    seq = [0] * size

    def place(s):
        if s == 0:
            out.append(tuple(seq))
            return
        step = s + 1
        for start in range(size - (k - 1) * step):
            slots = [start + o * step for o in range(k)]
            if all(seq[p] == 0 for p in slots):
                for p in slots:
                    seq[p] = s
                place(s - 1)
                for p in slots:
                    seq[p] = 0

    place(n)
    return out


def langford_first_mirror_ok(seq: Sequence[int], n: int) -> bool:
    """Symmetry-break predicate: the first copy of ``n`` is no later than in
    the reversed sequence."""
    return seq.index(n) <= list(reversed(seq)).index(n)
