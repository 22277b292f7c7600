"""Problems, finite domains, stores and their wire encoding.

A domain is a plain ``int`` used as a 64-bit set: bit ``v`` is set iff value
``v`` belongs to the domain.  A store is a ``tuple`` of such masks, one per
variable.  Both are immutable, cheap to copy and safe to share between
threads.
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

MAX_VALUE = 63
FULL_MASK = (1 << 64) - 1

Store = tuple  # tuple[int, ...]; one domain mask per variable


class ProblemError(ValueError):
    """Raised for an ill-formed problem (bad indices, out-of-range values)."""


class CodecError(ValueError):
    """Raised when a byte sequence cannot be decoded."""


# -- domains ----------------------------------------------------------------

def domain_from_values(values: Iterable[int]) -> int:
    mask = 0
    for v in values:
        if not 0 <= v <= MAX_VALUE:
            raise ProblemError(f"value {v} outside 0..{MAX_VALUE}")
        mask |= 1 << v
    return mask


def domain_range(lo: int, hi: int) -> int:
    """Mask holding every value in ``lo..hi`` (inclusive), clipped to 0..63."""
    lo = max(lo, 0)
    hi = min(hi, MAX_VALUE)
    if lo > hi:
        return 0
    return ((1 << (hi - lo + 1)) - 1) << lo


def domain_values(d: int) -> list[int]:
    out = []
    while d:
        low = d & -d
        out.append(low.bit_length() - 1)
        d ^= low
    return out


def domain_size(d: int) -> int:
    return bin(d).count("1")


def domain_min(d: int) -> int:
    return (d & -d).bit_length() - 1


def domain_max(d: int) -> int:
    return d.bit_length() - 1


def is_singleton(d: int) -> bool:
    return d != 0 and d & (d - 1) == 0


def domain_assign(d: int, v: int) -> int:
    """Reduce ``d`` to ``{v}``.  Assigning a value outside the domain is a
    programming error, not a search failure."""
    if not 0 <= v <= MAX_VALUE or not d >> v & 1:
        raise ValueError(f"value {v} is not in the domain")
    return 1 << v


def domain_remove(d: int, v: int) -> int:
    if 0 <= v <= MAX_VALUE:
        return d & ~(1 << v)
    return d


# -- stores -----------------------------------------------------------------

class Status(enum.Enum):
    SOLUTION = "solution"
    FAILED = "failed"
    OPEN = "open"


def store_status(s: Sequence[int]) -> Status:
    solved = True
    for d in s:
        if d == 0:
            return Status.FAILED
        if d & (d - 1):
            solved = False
    return Status.SOLUTION if solved else Status.OPEN


def store_solution(s: Sequence[int]) -> tuple[int, ...]:
    """Values of a solved store, in variable order."""
    if store_status(s) is not Status.SOLUTION:
        raise ValueError("store is not a solution")
    return tuple(d.bit_length() - 1 for d in s)


def store_from_values(values: Sequence[int]) -> Store:
    return tuple(1 << v for v in values)


def store_volume(s: Sequence[int]) -> int:
    """Number of tuples in the cross product of the store's domains."""
    vol = 1
    for d in s:
        vol *= domain_size(d)
    return vol


def store_encode(s: Sequence[int]) -> bytes:
    """Little-endian ``u16`` variable count followed by one ``u64`` mask per
    variable."""
    n = len(s)
    if n > 0xFFFF:
        raise CodecError("too many variables for the wire format")
    return struct.pack(f"<H{n}Q", n, *s)


def store_decode(data: bytes) -> Store:
    if len(data) < 2:
        raise CodecError("truncated store: missing variable count")
    (n,) = struct.unpack_from("<H", data)
    if len(data) != 2 + 8 * n:
        raise CodecError(f"store of {n} variables needs {2 + 8 * n} bytes, got {len(data)}")
    return struct.unpack_from(f"<{n}Q", data, 2)


def format_store(s: Sequence[int]) -> str:
    parts = []
    for d in s:
        vals = domain_values(d)
        if len(vals) == 1:
            parts.append(str(vals[0]))
        else:
            parts.append("{" + ",".join(map(str, vals)) + "}")
    return "[" + " ".join(parts) + "]"


# -- constraints ------------------------------------------------------------

@dataclass(frozen=True)
class EqOffset:
    """x[i] = x[j] + c"""
    i: int
    j: int
    c: int

    def holds(self, x: Sequence[int]) -> bool:
        return x[self.i] == x[self.j] + self.c

    @property
    def scope(self) -> tuple[int, ...]:
        return (self.i, self.j)


@dataclass(frozen=True)
class NeqOffset:
    """x[i] != x[j] + c"""
    i: int
    j: int
    c: int = 0

    def holds(self, x: Sequence[int]) -> bool:
        return x[self.i] != x[self.j] + self.c

    @property
    def scope(self) -> tuple[int, ...]:
        return (self.i, self.j)


@dataclass(frozen=True)
class LessThan:
    """x[i] < x[j]"""
    i: int
    j: int

    def holds(self, x: Sequence[int]) -> bool:
        return x[self.i] < x[self.j]

    @property
    def scope(self) -> tuple[int, ...]:
        return (self.i, self.j)


@dataclass(frozen=True)
class Sum:
    """x[i] + x[j] = x[k]"""
    i: int
    j: int
    k: int

    def holds(self, x: Sequence[int]) -> bool:
        return x[self.i] + x[self.j] == x[self.k]

    @property
    def scope(self) -> tuple[int, ...]:
        return (self.i, self.j, self.k)


@dataclass(frozen=True)
class AllDifferent:
    indices: tuple[int, ...]

    def __init__(self, indices: Iterable[int]):
        object.__setattr__(self, "indices", tuple(indices))

    def holds(self, x: Sequence[int]) -> bool:
        vals = [x[i] for i in self.indices]
        return len(set(vals)) == len(vals)

    @property
    def scope(self) -> tuple[int, ...]:
        return self.indices

    def decompose(self) -> list[NeqOffset]:
        idx = self.indices
        return [NeqOffset(a, b, 0) for p, a in enumerate(idx) for b in idx[p + 1:]]


ConstraintSpec = Union[EqOffset, NeqOffset, LessThan, Sum, AllDifferent]


@dataclass(frozen=True)
class Problem:
    """A CSP: ``n`` variables, their initial domains and the constraints.

    ``primitives`` holds the constraint list with every ``AllDifferent``
    expanded into pairwise ``NeqOffset``; the propagation engine only sees
    those.
    """
    n: int
    initial: Store
    constraints: tuple
    names: tuple = ()
    primitives: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        initial = tuple(int(d) for d in self.initial)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(initial) != self.n:
            raise ProblemError(f"{len(initial)} domains given for {self.n} variables")
        if any(d < 0 or d > FULL_MASK for d in initial):
            raise ProblemError("domain masks must fit in 64 bits")
        if self.names and len(self.names) != self.n:
            raise ProblemError("names must match the variable count")
        prims = []
        for c in self.constraints:
            if any(not 0 <= v < self.n for v in c.scope):
                raise ProblemError(f"{c} references a variable outside 0..{self.n - 1}")
            if len(set(c.scope)) != len(c.scope):
                raise ProblemError(f"{c} mentions a variable more than once")
            if isinstance(c, (EqOffset, NeqOffset)) and abs(c.c) > MAX_VALUE:
                raise ProblemError(f"{c}: offset outside -{MAX_VALUE}..{MAX_VALUE}")
            if isinstance(c, AllDifferent):
                prims.extend(c.decompose())
            else:
                prims.append(c)
        object.__setattr__(self, "primitives", tuple(prims))

    def name(self, i: int) -> str:
        return self.names[i] if self.names else f"x{i}"


def solution_check(values: Sequence[int], problem: Problem) -> bool:
    """Evaluate every constraint directly on a value tuple."""
    if len(values) != problem.n:
        return False
    for v, d in zip(values, problem.initial):
        if not 0 <= v <= MAX_VALUE or not d >> v & 1:
            return False
    return all(c.holds(values) for c in problem.constraints)
