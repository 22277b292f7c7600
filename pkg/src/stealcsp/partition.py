"""Splitting a store into pairwise-disjoint sub-stores that cover it."""
from __future__ import annotations

import enum
from collections import deque
from typing import Iterable, Sequence

from .core import Store, domain_size, domain_values, domain_from_values, store_volume


class PartitionError(ValueError):
    pass


class Strategy(enum.Enum):
    EVEN = "even"
    EAGER = "eager"


def even_split(s: Store, k: int) -> list[Store]:
    """Split the first variable holding at least ``k`` values into ``k``
    ascending runs: ``d // k`` values in the first ``k - d % k`` parts and one
    more in each of the last ``d % k``."""
    if k < 1:
        raise PartitionError("k must be at least 1")
    if k == 1:
        return [tuple(s)]
    for i, d in enumerate(s):
        if domain_size(d) >= k:
            break
    else:
        raise PartitionError(f"no variable has {k} or more values")
    values = domain_values(d)
    q, r = divmod(len(values), k)
    sizes = [q] * (k - r) + [q + 1] * r
    parts = []
    pos = 0
    for size in sizes:
        run = values[pos:pos + size]
        pos += size
        part = list(s)
        part[i] = domain_from_values(run)
        parts.append(tuple(part))
    return parts


def _first_open(s: Sequence[int]):
    for i, d in enumerate(s):
        if d & (d - 1):
            return i
    return None


def _with(s: Sequence[int], i: int, mask: int) -> Store:
    out = list(s)
    out[i] = mask
    return tuple(out)


def eager_split(k: int, queue: Iterable[Store]) -> list[Store]:
    """Partial breadth-first expansion.

    The head store is cut on its first non-singleton variable; if it has at
    least ``k`` values the first ``k - 1`` become singleton parts and the rest
    one remainder part, otherwise every value is expanded, appended behind
    the queue and ``k`` drops by ``d - 1``.  With a one-store queue the result
    has exactly ``k`` parts (``k + len(queue) - 1`` in general).

    A head whose domains are all singletons cannot be cut; it is emitted as a
    part of its own.  If the whole queue degenerates that way the result is
    shorter than requested, which callers detect from its length.
    """
    if k < 1:
        raise PartitionError("k must be at least 1")
    pending = deque(queue)
    if not pending:
        raise PartitionError("eager split needs at least one store")
    leaves = []
    while pending:
        head = pending.popleft()
        i = _first_open(head)
        if i is None:
            leaves.append(head)
            continue
        values = domain_values(head[i])
        d = len(values)
        if k <= d:
            cut = [_with(head, i, 1 << v) for v in values[:k - 1]]
            cut.append(_with(head, i, domain_from_values(values[k - 1:])))
            return leaves + cut + list(pending)
        pending.extend(_with(head, i, 1 << v) for v in values)
        k -= d - 1
    return leaves


def split(s: Store, k: int, strategy: Strategy) -> list[Store]:
    strategy = Strategy(strategy)
    if strategy is Strategy.EVEN:
        return even_split(s, k)
    return eager_split(k, [s])


def verify_partition(original: Sequence[int], parts: Sequence[Sequence[int]]) -> bool:
    """Exact check that ``parts`` are pairwise disjoint boxes covering
    ``original``.

    Each part must lie inside the original; two boxes are disjoint iff they
    are disjoint on some variable; disjoint sub-boxes cover the original iff
    their volumes add up to its volume.
    """
    n = len(original)
    if any(len(p) != n for p in parts):
        return False
    for p in parts:
        if any(d & ~o for d, o in zip(p, original)):
            return False
    live = [p for p in parts if all(p)]
    for x in range(len(live)):
        a = live[x]
        for y in range(x + 1, len(live)):
            b = live[y]
            if all(da & db for da, db in zip(a, b)):
                return False
    return sum(store_volume(p) for p in live) == store_volume(original)
