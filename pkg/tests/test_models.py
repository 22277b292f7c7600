import itertools

import pytest

from stealcsp.core import ProblemError, solution_check, store_solution
from stealcsp.models import (
    ModelSpec,
    build_golomb,
    build_langford,
    build_queens,
    golomb,
    golomb_index,
    langford,
    langford_sequence,
    queens,
)
from stealcsp.oracle import (
    count_solutions,
    golomb_rulers,
    langford_first_mirror_ok,
    langford_sequences,
    queens_solutions,
)
from stealcsp.propagation import Engine
from stealcsp.worker import Mode, TeamPools, Worker


def solve(problem, mode=Mode.ALL):
    sols = []
    Worker(0, Engine(problem), TeamPools.local(1), mode=mode,
           emit=lambda s: sols.append(store_solution(s))).run(problem.initial)
    return sols


@pytest.mark.parametrize("n, count", [(4, 2), (5, 10), (6, 4), (7, 40), (8, 92)])
def test_queens_counts(n, count):
    sols = solve(build_queens(n))
    assert len(sols) == count
    assert sorted(sols) == sorted(queens_solutions(n))


def test_queens_encoding_matches_brute_force():
    assert count_solutions(build_queens(6)) == len(queens_solutions(6))


@pytest.mark.parametrize("m, length", [(3, 3), (4, 6), (4, 7), (5, 11), (5, 12)])
def test_golomb_matches_ruler_enumeration(m, length):
    p = build_golomb(m, length)
    marks = sorted(tuple(s[:m]) for s in solve(p))
    assert marks == sorted(golomb_rulers(m, length))
    for s in solve(p):
        for (i, j), d in golomb_index(m).items():
            assert s[d] == s[j] - s[i]


@pytest.mark.parametrize("m, optimal", [(4, 6), (5, 11), (6, 17)])
def test_golomb_optimal_lengths(m, optimal):
    assert solve(build_golomb(m, optimal - 1), Mode.FIRST) == []
    assert len(solve(build_golomb(m, optimal), Mode.FIRST)) == 1


@pytest.mark.slow
def test_golomb10_length55_has_a_ruler():
    (sol,) = solve(build_golomb(10, 55), Mode.FIRST)
    marks = sol[:10]
    assert marks[0] == 0 and marks[-1] == 55
    dists = [b - a for a, b in itertools.combinations(marks, 2)]
    assert len(set(dists)) == len(dists)


@pytest.mark.parametrize("k, n", [(2, 3), (2, 4), (2, 7), (2, 8), (3, 9)])
def test_langford_without_symmetry_finds_every_sequence(k, n):
    p = build_langford(k, n, symmetry=False)
    seqs = sorted(tuple(langford_sequence(s, k, n)) for s in solve(p))
    assert seqs == sorted(langford_sequences(k, n))


@pytest.mark.parametrize("k, n", [(2, 3), (2, 4), (2, 7), (2, 8), (3, 9), (3, 10)])
def test_langford_symmetry_keeps_one_side(k, n):
    p = build_langford(k, n)
    seqs = {tuple(langford_sequence(s, k, n)) for s in solve(p)}
    every = set(langford_sequences(k, n))
    assert seqs == {s for s in every if langford_first_mirror_ok(s, n)}
    # every sequence or its mirror image survives
    assert all(s in seqs or s[::-1] in seqs for s in every)


@pytest.mark.parametrize("k, n", [(2, 5), (2, 6), (3, 4)])
def test_langford_unsolvable(k, n):
    assert langford_sequences(k, n) == []
    assert solve(build_langford(k, n)) == []


def test_langford_sequence_shape():
    (sol,) = solve(build_langford(2, 3))
    seq = langford_sequence(sol, 2, 3)
    for s in (1, 2, 3):
        i = seq.index(s)
        assert seq[i + s + 1] == s


@pytest.mark.parametrize("build, args", [
    (build_queens, (3,)), (build_queens, (65,)),
    (build_golomb, (2, 5)), (build_golomb, (4, 0)), (build_golomb, (4, 64)),
    (build_langford, (1, 4)), (build_langford, (2, 0)), (build_langford, (2, 33)),
])
def test_bad_parameters(build, args):
    with pytest.raises(ProblemError):
        build(*args)


@pytest.mark.parametrize("spec", [queens(6), golomb(4, 6), langford(2, 4), langford(2, 4, False)])
def test_model_spec_round_trip(spec):
    again = ModelSpec.from_dict(spec.as_dict())
    assert again == spec
    assert again.build().n == spec.build().n


def test_model_labels():
    assert queens(8).label() == "queens-8"
    assert golomb(10, 55).label() == "golomb-10-55"
    assert langford(2, 11).label() == "langford-2-11"


def test_unknown_model():
    with pytest.raises(ProblemError):
        ModelSpec("sudoku", {}).build()


def test_solutions_pass_the_checker():
    for p in (build_queens(6), build_golomb(5, 11), build_langford(2, 7)):
        assert all(solution_check(s, p) for s in solve(p))
