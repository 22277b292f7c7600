"""Acceptance criteria, one test per criterion.

Each test prints a single ``[C<n>] PASS|FAIL|SKIP`` line with the measured
figures, whatever the outcome, so a plain ``pytest -v`` run doubles as a report.
"""
import contextlib
import math
import multiprocessing as mp
import os
import random
import time
from collections import Counter

import pytest

from stealcsp.core import domain_size, domain_values, solution_check
from stealcsp.models import build_golomb, golomb, langford, queens
from stealcsp.oracle import count_solutions, golomb_rulers, langford_first_mirror_ok, langford_sequences, queens_solutions
from stealcsp.partition import PartitionError, Strategy, eager_split, even_split, verify_partition
from stealcsp.propagation import Engine
from stealcsp.team import Executor, run_in_process, run_spawned
from stealcsp.transport import MAIN, Kind
from stealcsp.worker import Mode, TeamPools, Worker, WorkerConfig, pool_get, pool_put, steal_work

from test_worker import CountingLock, _stress, solve as worker_solve

REFERENCE_SHARES = [25.5, 23.9, 17.1, 12.2, 8.1, 5.1, 3.3, 2.2, 1.2]


@pytest.fixture
def criterion(request):
    reporter = request.config.pluginmanager.getplugin("terminalreporter")

    @contextlib.contextmanager
    def report(tag, title):
        notes = []
        try:
            yield notes
        except pytest.skip.Exception as exc:
            _line(reporter, f"[{tag}] SKIP {title}: {exc}")
            raise
        except BaseException as exc:
            _line(reporter, f"[{tag}] FAIL {title}: {type(exc).__name__}: {exc}".splitlines()[0])
            raise
        _line(reporter, f"[{tag}] PASS {title}" + (f" ({'; '.join(notes)})" if notes else ""))

    return report


def _line(reporter, text):
    if reporter is None:
        print(text)
    else:
        reporter.ensure_newline()
        reporter.write_line(text)


def _usable_cpus():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


# -- 1 ------------------------------------------------------------------------------

INSTANCES = ([queens(n) for n in (4, 5, 6, 7, 8)]
             + [langford(2, n) for n in (3, 4, 5, 7)]
             + [golomb(4, 6), golomb(4, 5), golomb(5, 11)])
CONFIGS = [(1, 1), (1, 2), (1, 4), (2, 2), (3, 2)]


def _model_level_count(spec):
    """Second oracle that never looks at the constraint encoding."""
    p = spec.params
    if spec.kind == "queens":
        return len(queens_solutions(p["n"]))
    if spec.kind == "golomb":
        return len(golomb_rulers(p["marks"], p["length"]))
    return sum(1 for s in langford_sequences(p["k"], p["n"]) if langford_first_mirror_ok(s, p["n"]))


def test_c1_oracle_equivalence(criterion):
    with criterion("C1", "oracle equivalence over every configuration") as notes:
        bad, runs = [], 0
        for spec in INSTANCES:
            problem = spec.build()
            expected = count_solutions(problem)
            assert expected == _model_level_count(spec), spec.label()
            for teams, workers in CONFIGS:
                for strategy in Strategy:
                    for backend in ("in-process", "spawn"):
                        kw = dict(teams=teams, workers=workers, inter=strategy, intra=strategy, timeout=60)
                        r = run_spawned(spec, **kw) if backend == "spawn" else run_in_process(problem, **kw)
                        runs += 1
                        if r.count != expected or r.duplicates:
                            bad.append((spec.label(), teams, workers, strategy.value, backend, r.count, expected))
                        assert all(solution_check(s, problem) for s in r.solutions)
        notes.append(f"{runs} runs, {len(bad)} mismatches")
        assert not bad, bad[:5]


# -- 2 ------------------------------------------------------------------------------

def _random_store(rng):
    n = rng.randint(1, 5)
    return tuple(sum(1 << v for v in rng.sample(range(64), rng.randint(1, 8))) for _ in range(n))


def test_c2_partition_properties(criterion):
    with criterion("C2", "partition properties on 1000 random stores") as notes:
        rng = random.Random(2024)
        checked = unsplittable = 0
        while checked < 1000:
            s, k = _random_store(rng), rng.randint(2, 6)
            try:
                even = even_split(s, k)
                eager = eager_split(k, [s])
            except PartitionError:
                unsplittable += 1
                continue
            checked += 1
            assert verify_partition(s, even) and verify_partition(s, eager)
            assert len(eager) == k
            i = next(i for i, d in enumerate(s) if domain_size(d) >= k)
            d = domain_size(s[i])
            sizes = [domain_size(p[i]) for p in even]
            short = k - d % k
            assert sizes == [d // k] * short + [d // k + 1] * (k - short)
            assert sum((domain_values(p[i]) for p in even), []) == domain_values(s[i])
        abc = (7, 7, 7)
        a, b, c = 1, 2, 4
        expected = {(b, a, 7), (b, b | c, 7), (c, 7, 7), (a, a, 7), (a, b, 7), (a, c, 7)}
        parts = eager_split(6, [abc])
        assert len(parts) == 6 and set(parts) == expected
        notes.append(f"{checked} stores checked, {unsplittable} too small for k redrawn, three-variable eager case reproduced")


# -- 3 ------------------------------------------------------------------------------

def test_c3_deque_protocol(criterion):
    with criterion("C3", "deque protocol") as notes:
        team = TeamPools.local(2)
        for i in range(4):
            pool_put(team.pools[1], i, 0)
        assert pool_get(team, 1, WorkerConfig())[0] == 3  # owner: newest
        assert steal_work(team, 0, 2)[0] == 0  # thief: oldest
        assert steal_work(team, 0, 2)[0] == 1
        assert steal_work(team, 0, 2) is None  # one entry left, below threshold
        assert team.sizes() == [0, 1]

        # owner never locks while its pool holds SAFE-SIZE or more
        p = build_golomb(5, 12)
        team = TeamPools.local(1)
        lock = CountingLock(team.pools[0])
        team.pools[0].lock = lock
        config = WorkerConfig(safe_size=4, threshold=2)
        Worker(0, Engine(p), team, config).run(p.initial)
        assert lock.sizes and max(lock.sizes) < config.safe_size

        # seeded interleavings of four workers
        for seed in range(10):
            sols, ws, _ = worker_solve(build_golomb(5, 12), 4, schedule_seed=seed)
            assert Counter(s[:5] for s in sols) == Counter(golomb_rulers(5, 12))

        for kind in ("local", "shared"):
            pools = (TeamPools.local(4) if kind == "local"
                     else TeamPools.shared(4, 1, 100_000, mp.get_context("spawn")))
            pushed, removed, leftovers = _stress(pools, 25_000, 4, seed=11)
            assert all(c == 1 for c in removed.values())
            assert removed + Counter(leftovers) == pushed
            notes.append(f"{kind} stress: {sum(pushed.values())} puts, {sum(removed.values())} gets, no loss")


# -- 4 ------------------------------------------------------------------------------

def test_c4_work_distribution(criterion):
    with criterion("C4", "Golomb-10 first-mark work distribution") as notes:
        started = time.perf_counter()
        r = run_in_process(build_golomb(10, 55), 1, 1, timeout=600)
        elapsed = time.perf_counter() - started
        sub = r.stats.subtree_nodes
        total = sum(sub.values())
        shares = [100 * sub.get(m, 0) / total for m in range(1, 10)]
        notes.append("shares " + " ".join(f"{x:.1f}" for x in shares) + f", {elapsed:.0f}s")
        assert r.count >= 1
        assert all(x > y for x, y in zip(shares, shares[1:])), "not monotonically decreasing"
        worst = max(abs(x - y) for x, y in zip(shares, REFERENCE_SHARES))
        notes.append(f"max deviation {worst:.1f}pp")
        assert worst <= 6.0


# -- 5 ------------------------------------------------------------------------------

def _best_of(n, fn):
    return min(fn() for _ in range(n))


def test_c5_speedup_trend(criterion):
    with criterion("C5", "speedup trend") as notes:
        cpus = _usable_cpus()
        if cpus < 4:
            pytest.skip(f"needs 4 usable cores, host has {cpus}")
        problem = queens(13).build()
        base = _best_of(2, lambda: run_in_process(problem, 1, 1).time_s)
        for strategy in Strategy:
            par = _best_of(2, lambda: run_in_process(problem, 1, 4, intra=strategy,
                                                     executor=Executor.PROCESS).time_s)
            notes.append(f"queens-13 1x4 {strategy.value}: {base / par:.2f}x")
            assert base / par >= 1.5
        spec = golomb(10, 55)
        kw = dict(teams=2, workers=1, inter=Strategy.EAGER, intra=Strategy.EAGER, timeout=900)
        stealing = run_spawned(spec, **kw).time_s
        no_steal = run_spawned(spec, worker_config=WorkerConfig(threshold=math.inf), **kw).time_s
        notes.append(f"golomb-10 2 teams: {stealing:.1f}s stealing vs {no_steal:.1f}s without")
        assert no_steal > 1.1 * stealing


# -- 6 ------------------------------------------------------------------------------

@pytest.mark.parametrize("backend", ["in-process", "spawn"])
def test_c6_first_mode(criterion, backend):
    # workers often finish their own solution before STOP lands, so latencies
    # are pooled over repeated runs
    with criterion("C6", f"FIRST mode on Langford(2,11), 2x2, {backend}") as notes:
        spec = langford(2, 11)
        problem = spec.build()
        kw = dict(teams=2, workers=2, mode=Mode.FIRST, timeout=120)
        latencies = []
        trials = 20
        for _ in range(trials):
            r = run_in_process(problem, **kw) if backend == "in-process" else run_spawned(spec, **kw)
            assert r.count == 1 and solution_check(r.first_solution, problem)
            latencies += r.stop_latencies
        assert latencies, "no worker was still searching when STOP arrived"
        notes.append(f"{trials} runs, {len(latencies)} stopped workers, "
                     f"max stop latency {1000 * max(latencies):.3f} ms")
        assert max(latencies) < 0.010


# -- 7 ------------------------------------------------------------------------------

def _full_drain(trace, teams):
    """Each team's last round polls every peer, hears NO_WORK from each and
    then reports idle; the main controller then terminates everyone."""
    for t in range(teams):
        idle_at = max(i for i, e in enumerate(trace) if e.src == t and e.dst == MAIN and e.kind is Kind.TEAM_IDLE)
        before = trace[:idle_at]
        for u in range(teams):
            if u == t:
                continue
            asked = [i for i, e in enumerate(before) if (e.src, e.dst, e.kind) == (t, u, Kind.REQUEST_WORK)]
            if not asked:
                return False
            if not any((e.src, e.dst, e.kind) == (u, t, Kind.NO_WORK) for e in before[asked[-1]:]):
                return False
    last_idle = max(i for i, e in enumerate(trace) if e.kind is Kind.TEAM_IDLE)
    terms = {e.dst for e in trace[last_idle:] if e.kind is Kind.TERMINATE}
    return terms == set(range(teams))


def test_c7_termination(criterion):
    with criterion("C7", "termination and full drain") as notes:
        spec = langford(2, 5)
        problem = spec.build()
        runs = 0
        for teams, workers in CONFIGS:
            for strategy in Strategy:
                r = run_in_process(problem, teams, workers, inter=strategy, intra=strategy, timeout=30)
                assert r.count == 0
                if teams > 1:
                    assert _full_drain(r.trace, teams), (teams, workers, strategy)
                r = run_spawned(spec, teams, workers, inter=strategy, intra=strategy, timeout=30)
                assert r.count == 0
                runs += 2
        r = run_in_process(queens(8).build(), 3, 2, timeout=30)
        assert r.count == 92 and _full_drain(r.trace, 3)
        notes.append(f"{runs + 1} runs terminated, drain seen in every multi-team trace")
