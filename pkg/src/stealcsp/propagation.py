"""Constraint revision and fixpoint propagation over stores.

Binary constraints are revised to domain consistency, ``Sum`` to bounds
consistency.  ``NeqOffset`` can only prune once one side is a singleton, so
the engine wakes it on "fixed" events only; every other constraint wakes on
any domain change.
"""
from __future__ import annotations

from collections import deque
from typing import Iterable, Optional, Sequence

from .core import (
    FULL_MASK,
    MAX_VALUE,
    AllDifferent,
    EqOffset,
    LessThan,
    NeqOffset,
    Problem,
    Store,
    Sum,
)

FAIL = None

EQ, NEQ, LT, SUM = range(4)


def _below(v: int) -> int:
    """Mask of values < v."""
    if v <= 0:
        return 0
    if v > MAX_VALUE:
        return FULL_MASK
    return (1 << v) - 1


def _shift(m: int, c: int) -> int:
    """{v + c : v in m}, clipped to 0..63."""
    if c >= 0:
        return (m << c) & FULL_MASK
    return m >> -c


def _revise(kind, a, b, c, doms):
    """Revise one primitive in place.

    Returns the tuple of variables whose domain changed, or ``None`` when a
    domain was emptied.
    """
    if kind == NEQ:
        da, db = doms[a], doms[b]
        changed = ()
        if db and not db & (db - 1):
            v = db.bit_length() - 1 + c
            if 0 <= v <= MAX_VALUE and da >> v & 1:
                da &= ~(1 << v)
                if not da:
                    return None
                doms[a] = da
                changed = (a,)
        if da and not da & (da - 1):
            v = da.bit_length() - 1 - c
            if 0 <= v <= MAX_VALUE and db >> v & 1:
                db &= ~(1 << v)
                if not db:
                    return None
                doms[b] = db
                changed += (b,)
        return changed

    if kind == EQ:
        da, db = doms[a], doms[b]
        na = da & _shift(db, c)
        if not na:
            return None
        nb = db & _shift(na, -c)
        if not nb:
            return None
        changed = ()
        if na != da:
            doms[a] = na
            changed = (a,)
        if nb != db:
            doms[b] = nb
            changed += (b,)
        return changed

    if kind == LT:
        da, db = doms[a], doms[b]
        na = da & _below(db.bit_length() - 1)
        if not na:
            return None
        nb = db & ~_below((na & -na).bit_length())
        if not nb:
            return None
        changed = ()
        if na != da:
            doms[a] = na
            changed = (a,)
        if nb != db:
            doms[b] = nb
            changed += (b,)
        return changed

    # SUM: x[a] + x[b] = x[c], iterated to a bounds fixpoint
    k = c
    da, db, dk = oa, ob, ok = doms[a], doms[b], doms[k]
    while True:
        amin, amax = (da & -da).bit_length() - 1, da.bit_length() - 1
        bmin, bmax = (db & -db).bit_length() - 1, db.bit_length() - 1
        kmin, kmax = (dk & -dk).bit_length() - 1, dk.bit_length() - 1
        stable = True
        lo, hi = amin + bmin, amax + bmax
        if kmin < lo:
            dk &= -(1 << lo)
            stable = False
        if kmax > hi:
            dk &= (1 << (hi + 1)) - 1
            stable = False
        if not dk:
            return None
        if not stable:
            kmin, kmax = (dk & -dk).bit_length() - 1, dk.bit_length() - 1
        lo, hi = kmin - bmax, kmax - bmin
        if amin < lo:
            da &= -(1 << lo)
            stable = False
        if amax > hi:
            da = da & ((1 << (hi + 1)) - 1) if hi >= 0 else 0
            stable = False
        if not da:
            return None
        if not stable:
            amin, amax = (da & -da).bit_length() - 1, da.bit_length() - 1
        lo, hi = kmin - amax, kmax - amin
        if bmin < lo:
            db &= -(1 << lo)
            stable = False
        if bmax > hi:
            db = db & ((1 << (hi + 1)) - 1) if hi >= 0 else 0
            stable = False
        if not db:
            return None
        if stable:
            break
    changed = ()
    if da != oa:
        doms[a] = da
        changed = (a,)
    if db != ob:
        doms[b] = db
        changed += (b,)
    if dk != ok:
        doms[k] = dk
        changed += (k,)
    return changed


def _encode(con) -> tuple:
    if isinstance(con, NeqOffset):
        return (NEQ, con.i, con.j, con.c)
    if isinstance(con, EqOffset):
        return (EQ, con.i, con.j, con.c)
    if isinstance(con, LessThan):
        return (LT, con.i, con.j, 0)
    if isinstance(con, Sum):
        return (SUM, con.i, con.j, con.k)
    raise TypeError(f"not a primitive constraint: {con!r}")


def revise_constraint(con, s: Sequence[int]):
    """Revise a single constraint against store ``s``.

    Returns ``(new_store, changed_variables)`` or ``FAIL``.  An
    ``AllDifferent`` is revised through its pairwise decomposition, to the
    local fixpoint of those pairs.
    """
    doms = list(s)
    if isinstance(con, AllDifferent):
        engine = Engine(Problem(len(s), tuple(s), [con]))
        out = engine.propagate(s, con.indices)
        if out is FAIL:
            return FAIL
        return out, {i for i in range(len(s)) if out[i] != s[i]}
    changed = _revise(*_encode(con), doms)
    if changed is None:
        return FAIL
    return tuple(doms), set(changed)


class Engine:
    """Propagation engine for one problem.

    Holds the encoded primitives and the variable incidence index; it keeps no
    per-search state, so one instance per worker (or a shared one) is fine.

    ``NeqOffset`` primitives are not queued as constraints: revising one only
    does something once a side is fixed, so each variable carries the list of
    ``(other, delta)`` removals its fixing implies and fixed variables go
    through their own queue.  The fixpoint is the same.
    """

    def __init__(self, problem: Problem):
        self.problem = problem
        encoded = [_encode(c) for c in problem.primitives]
        self.cons = [c for c in encoded if c[0] != NEQ]
        n = problem.n
        on_change = [[] for _ in range(n)]
        on_fix = [[] for _ in range(n)]
        for ci, (kind, a, b, c) in enumerate(self.cons):
            scope = (a, b, c) if kind == SUM else (a, b)
            for v in set(scope):
                on_change[v].append(ci)
        for kind, a, b, c in encoded:
            if kind == NEQ:
                on_fix[b].append((a, c))
                on_fix[a].append((b, -c))
        self.on_change = [tuple(x) for x in on_change]
        self.on_fix = [tuple(x) for x in on_fix]
        self.revisions = 0

    def propagate(self, s: Sequence[int], seeds: Iterable[int], rng=None) -> Optional[Store]:
        """Run revisions until nothing is queued.

        ``seeds`` are the variables whose domain changed since ``s`` was last
        at a fixpoint.  ``rng`` (a ``random.Random``) processes queued work in
        random order instead of FIFO; the fixpoint does not depend on it.
        Returns the fixpoint store, or ``FAIL``.
        """
        doms = list(s)
        cons = self.cons
        on_change, on_fix = self.on_change, self.on_fix
        inq = bytearray(len(cons))
        queue = deque() if rng is None else []
        push = queue.append
        fixed = []

        for v in seeds:
            d = doms[v]
            if not d:
                return FAIL
            for ci in on_change[v]:
                if not inq[ci]:
                    inq[ci] = 1
                    push(ci)
            if not d & (d - 1):
                fixed.append(v)

        if rng is None:
            pop = queue.popleft
        else:
            def pop():
                i = rng.randrange(len(queue))
                queue[i], queue[-1] = queue[-1], queue[i]
                return queue.pop()
        revise = _revise
        revisions = 0
        while True:
            if fixed and (rng is None or not queue or rng.random() < 0.5):
                if rng is not None:
                    i = rng.randrange(len(fixed))
                    fixed[i], fixed[-1] = fixed[-1], fixed[i]
                v = fixed.pop()
                u = doms[v].bit_length() - 1
                for w, delta in on_fix[v]:
                    x = u + delta
                    if x < 0 or x > 63:
                        continue
                    dw = doms[w]
                    if not dw >> x & 1:
                        continue
                    dw ^= 1 << x
                    if not dw:
                        self.revisions += revisions
                        return FAIL
                    doms[w] = dw
                    for cj in on_change[w]:
                        if not inq[cj]:
                            inq[cj] = 1
                            push(cj)
                    if not dw & (dw - 1):
                        fixed.append(w)
                continue
            if not queue:
                break
            ci = pop()
            inq[ci] = 0
            revisions += 1
            changed = revise(*cons[ci], doms)
            if changed is None:
                self.revisions += revisions
                return FAIL
            for v in changed:
                for cj in on_change[v]:
                    if not inq[cj] and cj != ci:
                        inq[cj] = 1
                        push(cj)
                d = doms[v]
                if not d & (d - 1):
                    fixed.append(v)
        self.revisions += revisions
        return tuple(doms)


def propagate(problem: Problem, s: Sequence[int], seeds: Iterable[int], rng=None) -> Optional[Store]:
    """One-shot propagation; builds a throwaway engine for ``problem``."""
    return Engine(problem).propagate(s, seeds, rng=rng)
