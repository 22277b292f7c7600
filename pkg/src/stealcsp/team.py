"""Teams of workers, their controllers and the main controller.

A team is a group of workers sharing pools plus one controller.  The
controller reacts to two sources: its workers (idle, solution) and other
teams (protocol messages).  ``Controller`` and ``MainController`` are plain
state machines whose outputs go through callbacks, so the same logic runs
under real threads (``Team``), inside team processes (``run_spawned``) and
in the single-threaded ``harness.Simulation``.

Inter-team plan, as implemented:

* team 0 starts as SUPPLIER; everybody believes so;
* a team whose workers are all idle asks its believed supplier first, then
  polls the other teams in ascending id order from its own id; a team that
  cannot be reached is remembered as terminated and skipped from then on;
* a team asked for work steals the head of its biggest worker pool under the
  usual threshold rule and ships it, or answers NO_WORK;
* a receiver takes the SUPPLIER role when the work came from the team it
  believed to be the supplier.  The supplier gives the role up (and points
  its own belief at the receiver) when the receiver will take it; a team
  without the role refuses requesters that might still believe it has the
  role, so two teams never hold it at once;
* after a full round of NO_WORK the team reports TEAM_IDLE to the main
  controller but keeps answering requests until TERMINATE;
* FIRST mode: the first solution makes the main controller send STOP to
  every team, each team acknowledges with TEAM_IDLE once its workers have
  stopped and no reply is outstanding.  The main controller sends
  TERMINATE once every team has reported TEAM_IDLE, in both modes.
"""
from __future__ import annotations

import enum
import json
import logging
import math
import multiprocessing as mp
import os
import queue
import subprocess
import sys
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .core import Problem, Store, solution_check, store_solution
from .partition import PartitionError, Strategy, split
from .propagation import FAIL, Engine
from .transport import (
    MAIN,
    NO_WORK,
    STOP,
    TERMINATE,
    InProcessHub,
    Kind,
    Message,
    SocketEndpoint,
    TransportError,
)
from .worker import (
    Flag,
    Mode,
    Outcome,
    SearchStats,
    SharedFlag,
    TeamPools,
    VarHeuristic,
    Worker,
    WorkerConfig,
    select_variable,
    steal_work,
)

log = logging.getLogger(__name__)


class ProtocolError(RuntimeError):
    pass


class RunTimeout(RuntimeError):
    """The run did not terminate in time; ``dump`` describes every party."""

    def __init__(self, message: str, dump: dict):
        super().__init__(message)
        self.dump = dump


class Phase(enum.Enum):
    RUNNING = "running"
    DRAINING = "draining"
    TERMINATED = "terminated"


class Role(enum.Enum):
    SUPPLIER = "supplier"
    ORDINARY = "ordinary"


class Executor(enum.Enum):
    THREAD = "thread"
    PROCESS = "process"


@dataclass(frozen=True)
class TeamConfig:
    team_id: int = 0
    workers: int = 1
    intra: Strategy = Strategy.EVEN
    inter: Strategy = Strategy.EVEN
    worker: WorkerConfig = WorkerConfig()
    executor: Executor = Executor.THREAD

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("a team needs at least one worker")
        object.__setattr__(self, "intra", Strategy(self.intra))
        object.__setattr__(self, "inter", Strategy(self.inter))
        object.__setattr__(self, "executor", Executor(self.executor))


def _split_or_whole(store: Store, k: int, strategy: Strategy) -> list:
    """``k`` work items for a team's workers; a store too small to split goes
    to the first worker and the others start by stealing."""
    try:
        parts = split(store, k, strategy)
    except PartitionError:
        parts = [store]
    return list(parts) + [None] * (k - len(parts))


class Controller:
    """Protocol state of one team.

    Callbacks: ``send(dst, message)`` may raise ``TransportError``;
    ``restart(items)`` hands one item per worker (a store, or ``None`` for
    "start by stealing"); ``stop_workers()`` raises the team's stop flag.
    """

    def __init__(self, team_id: int, n_teams: int, workers: int, pools: TeamPools, *,
                 send: Callable, restart: Callable, stop_workers: Callable,
                 intra: Strategy = Strategy.EVEN, threshold: float = 2, main: int = MAIN,
                 clock: Callable = time.perf_counter):
        self.team_id = team_id
        self.n_teams = n_teams
        self.workers = workers
        self.pools = pools
        self.intra = Strategy(intra)
        self.threshold = threshold
        self.main = main
        self._send_raw = send
        self._restart = restart
        self._stop_workers = stop_workers
        self.clock = clock

        self.idle: set = set(range(workers))
        self.role = Role.SUPPLIER if team_id == 0 else Role.ORDINARY
        self.supplier = 0
        self.known_teams = list(range(n_teams))
        self.terminated: set = set()
        self.phase = Phase.RUNNING
        self.stopping = False
        self.stop_set_at = None
        self.closed = False
        self.idle_sent = False

        self._poll: deque = deque()
        self._first = None
        self.awaiting = None

        self.requests_sent = 0
        self.supplies_sent = 0
        self.supplies_received = 0
        self.no_work_sent = 0
        self.refusals = 0
        self.role_events: dict = {}
        self.steal_stats = SearchStats()
        self.history: deque = deque(maxlen=64)

    # -- plumbing --------------------------------------------------------
    def _send(self, dst, msg):
        self.history.append(("out", dst, msg.kind.name))
        self._send_raw(dst, msg)

    def snapshot(self) -> dict:
        return {
            "team": self.team_id,
            "phase": self.phase.value,
            "role": self.role.value,
            "believed_supplier": self.supplier,
            "idle_workers": sorted(self.idle),
            "awaiting_reply_from": self.awaiting,
            "still_to_poll": list(self._poll),
            "terminated_peers": sorted(self.terminated),
            "stopping": self.stopping,
            "pool_sizes": self.pools.sizes(),
            "recent": list(self.history),
        }

    # -- worker side -----------------------------------------------------
    def start(self, items: Sequence) -> None:
        items = list(items) + [None] * (self.workers - len(items))
        self.idle.clear()
        self.phase = Phase.RUNNING
        self._restart(items)

    def worker_idle(self, w: int) -> None:
        self.history.append(("idle", w))
        self.idle.add(w)
        if len(self.idle) < self.workers:
            return
        if self.stopping:
            self._maybe_ack()
        elif self.phase is Phase.RUNNING:
            self._start_round()

    def solution(self, values) -> None:
        self._send(self.main, Message.solution(values))

    # -- inter-team side -------------------------------------------------
    def message(self, src: int, msg: Message) -> None:
        self.history.append(("in", src, msg.kind.name))
        kind = msg.kind
        if kind is Kind.REQUEST_WORK:
            self._on_request(msg.team)
        elif kind is Kind.SUPPLY_WORK:
            self._on_supply(src, msg.store)
        elif kind is Kind.NO_WORK:
            self._on_no_work(src)
        elif kind is Kind.STOP:
            self._on_stop()
        elif kind is Kind.TERMINATE:
            self.stopping = True
            self._stop_workers()
            self.phase = Phase.TERMINATED
            self.closed = True
        else:
            raise ProtocolError(f"team {self.team_id} got {kind.name} from {src}")

    def _may_believe_me(self, peer: int) -> bool:
        """Could ``peer`` currently think this team holds the SUPPLIER role?

        A peer's belief only moves when it hands the role over (to the
        receiver) or takes it (to itself), so it can point here only if its
        last role exchange with us was handing us the role, or if it never
        had one and we are team 0.
        """
        last = self.role_events.get(peer)
        return last == "got" or (last is None and self.team_id == 0)

    def _on_request(self, requester: int) -> None:
        entry = None
        if self.stopping:
            pass
        elif self.role is Role.ORDINARY and self._may_believe_me(requester):
            # shipping now would make the requester claim a role we lack
            self.refusals += 1
        else:
            entry = steal_work(self.pools, None, self.threshold, self.steal_stats)
        if entry is None:
            self.no_work_sent += 1
            self._send(requester, NO_WORK)
            return
        self._send(requester, Message.supply_work(entry[0]))
        self.supplies_sent += 1
        if self.role is Role.SUPPLIER and self._may_believe_me(requester):
            self.role = Role.ORDINARY
            self.supplier = requester
            self.role_events[requester] = "gave"

    def _on_supply(self, src: int, store) -> None:
        if src != self.awaiting:
            raise ProtocolError(f"team {self.team_id}: unsolicited SUPPLY_WORK from {src}")
        self.awaiting = None
        self._poll.clear()
        if self.stopping:
            self._maybe_ack()  # the search is over; the store is dropped
            return
        self.supplies_received += 1
        if src == self._first:
            self.role = Role.SUPPLIER
            self.supplier = self.team_id
            self.role_events[src] = "got"
        self.start(_split_or_whole(tuple(store), self.workers, self.intra))

    def _on_no_work(self, src: int) -> None:
        if src != self.awaiting:
            raise ProtocolError(f"team {self.team_id}: unexpected NO_WORK from {src}")
        self.awaiting = None
        if self.stopping:
            self._poll.clear()
            self._maybe_ack()
            return
        self._ask_next()

    def _on_stop(self) -> None:
        if self.stopping:
            return
        self.stopping = True
        self.stop_set_at = self.clock()
        self._stop_workers()
        self._maybe_ack()

    # -- request rounds --------------------------------------------------
    def _start_round(self) -> None:
        self.phase = Phase.DRAINING
        n = self.n_teams
        order = [(self.team_id + i) % n for i in range(1, n)]
        order = [t for t in order if t not in self.terminated]
        first = self.supplier
        if first == self.team_id or first in self.terminated:
            first = None
        if first is not None:
            order.remove(first)
            order.insert(0, first)
        self._first = first
        self._poll = deque(order)
        self._ask_next()

    def _ask_next(self) -> None:
        while self._poll:
            t = self._poll.popleft()
            try:
                self._send(t, Message.request_work(self.team_id))
            except TransportError:
                self.terminated.add(t)
                continue
            self.requests_sent += 1
            self.awaiting = t
            return
        self._report_idle()

    def _report_idle(self) -> None:
        if not self.idle_sent:
            self.idle_sent = True
            self._send(self.main, Message.team_idle(self.team_id))
        self.phase = Phase.TERMINATED

    def _maybe_ack(self) -> None:
        if len(self.idle) == self.workers and self.awaiting is None:
            self._report_idle()

    def report(self) -> dict:
        return {
            "requests_sent": self.requests_sent,
            "supplies_sent": self.supplies_sent,
            "supplies_received": self.supplies_received,
            "no_work_sent": self.no_work_sent,
            "refusals": self.refusals,
            "controller_steals": self.steal_stats.steals_attempted,
            "role": self.role.value,
        }


class MainController:
    """Collects solutions and decides global termination.

    ``check(values)`` is the soundness gate applied to every incoming
    solution; a failure raises ``AssertionError``.
    """

    def __init__(self, n_teams: int, mode: Mode, send: Callable, check: Callable = None):
        self.n_teams = n_teams
        self.mode = Mode(mode)
        self._send = send
        self.check = check
        self.solutions: list = []
        self.discarded = 0
        self.idle: set = set()
        self.unreachable: set = set()
        self.stop_sent = False
        self.done = False

    def _broadcast(self, msg):
        for t in range(self.n_teams):
            if t in self.unreachable:
                continue
            try:
                self._send(t, msg)
            except TransportError:
                self.unreachable.add(t)
                self.idle.add(t)

    def message(self, src: int, msg: Message) -> None:
        if msg.kind is Kind.SOLUTION:
            values = msg.values
            if self.check is not None and not self.check(values):
                raise AssertionError(f"team {src} reported a non-solution {values}")
            if self.mode is Mode.ALL:
                self.solutions.append(values)
            elif self.solutions:
                self.discarded += 1
            else:
                self.solutions.append(values)
                self.stop_sent = True
                self._broadcast(STOP)
        elif msg.kind is Kind.TEAM_IDLE:
            self.idle.add(msg.team)
        else:
            raise ProtocolError(f"main controller got {msg.kind.name} from {src}")
        if not self.done and len(self.idle) >= self.n_teams:
            self.done = True
            self._broadcast(TERMINATE)

    def snapshot(self) -> dict:
        return {
            "idle_teams": sorted(self.idle),
            "solutions": len(self.solutions),
            "stop_sent": self.stop_sent,
            "done": self.done,
        }


# -- bootstrap -----------------------------------------------------------------

@dataclass
class Plan:
    """Initial work: ``parts[t][w]`` is worker ``w`` of team ``t``'s store
    (``None``: start by stealing)."""
    root: Optional[Store]
    key_var: Optional[int]
    team_parts: list
    parts: list


def _two_level(store: Store, teams: int, workers: int, inter: Strategy, intra: Strategy):
    team_parts = list(split(store, teams, inter)) if teams > 1 else [store]
    team_parts += [None] * (teams - len(team_parts))
    parts = []
    for tp in team_parts:
        ws = [] if tp is None else list(split(tp, workers, intra)) if workers > 1 else [tp]
        parts.append(ws + [None] * (workers - len(ws)))
    return team_parts, parts


def bootstrap_plan(problem: Problem, teams: int, workers: int,
                   inter: Strategy = Strategy.EVEN, intra: Strategy = Strategy.EVEN) -> Plan:
    """Two-level partition of the propagated root store.

    When the root fixpoint is too small to split as asked (tiny instances
    that propagation nearly solves) the unpropagated initial store is split
    instead; it covers the same solutions.  ``PartitionError`` is raised only
    if that fails too.  The key variable (first open variable of the root)
    labels subtree node counts.
    """
    if teams < 1 or workers < 1:
        raise ValueError("teams and workers must be at least 1")
    root = Engine(problem).propagate(problem.initial, range(problem.n))
    if root is FAIL:
        return Plan(None, None, [None] * teams, [[None] * workers for _ in range(teams)])
    key_var = select_variable(root, VarHeuristic.LEX_FIRST)
    try:
        team_parts, parts = _two_level(root, teams, workers, Strategy(inter), Strategy(intra))
    except PartitionError:
        team_parts, parts = _two_level(problem.initial, teams, workers, Strategy(inter), Strategy(intra))
    return Plan(root, key_var, team_parts, parts)


# -- threaded team runtime -----------------------------------------------------

def _pool_capacity(problem: Problem) -> int:
    return sum(max(bin(d).count("1") - 1, 0) for d in problem.initial) + 2


def _process_worker(wid, problem, pools, config, mode, stop, key_var, jobs, events):
    engine = Engine(problem)
    worker = Worker(wid, engine, pools, config, mode,
                    emit=lambda s: events.put(("solution", wid, store_solution(s))),
                    stop=stop, key_var=key_var)
    while True:
        job = jobs.get()
        if job is None:
            break
        outcome = worker.run(job[0])
        events.put(("idle", wid, outcome.value, time.perf_counter()))
    events.put(("stats", wid, worker.stats.as_dict()))


class Team:
    """One team: worker threads or processes, plus a controller thread.

    ``start()`` brings everything up without handing out work; ``release``
    gives the workers their initial stores.  The controller thread exits on
    TERMINATE (or ``abort``) after shutting the workers down.
    """

    def __init__(self, config: TeamConfig, problem: Problem, n_teams: int, endpoint, mode: Mode = Mode.ALL,
                 key_var: Optional[int] = None, main: int = MAIN):
        self.config = config
        self.problem = problem
        self.endpoint = endpoint
        self.mode = Mode(mode)
        self.key_var = key_var
        self.events: queue.Queue = queue.Queue()
        nw = config.workers
        self._threads: list = []
        self._procs: list = []
        if config.executor is Executor.THREAD:
            self.pools = TeamPools.local(nw)
            self.stop = Flag()
            engine = Engine(problem)
            self.workers = [
                Worker(w, engine, self.pools, config.worker, self.mode,
                       emit=self._emitter(w), stop=self.stop, key_var=key_var)
                for w in range(nw)
            ]
            self.jobs = [queue.Queue() for _ in range(nw)]
        else:
            ctx = mp.get_context("spawn")
            self.pools = TeamPools.shared(nw, problem.n, _pool_capacity(problem), ctx)
            self.stop = SharedFlag(ctx)
            self.workers = []
            self.jobs = [ctx.Queue() for _ in range(nw)]
            self._mp_events = ctx.Queue()
            self._procs = [
                ctx.Process(target=_process_worker, daemon=True,
                            args=(w, problem, self.pools, config.worker, self.mode, self.stop,
                                  key_var, self.jobs[w], self._mp_events))
                for w in range(nw)
            ]
        self.controller = Controller(
            config.team_id, n_teams, nw, self.pools,
            send=endpoint.send, restart=self._restart, stop_workers=self.stop.set,
            intra=config.intra, threshold=config.worker.threshold, main=main)
        self.worker_stats: list = [None] * nw
        self.stop_latencies: list = []
        self.error: Optional[BaseException] = None
        self._ctl = threading.Thread(target=self._loop, name=f"team-{config.team_id}", daemon=True)

    def _emitter(self, w):
        events = self.events
        return lambda s: events.put(("solution", w, store_solution(s)))

    def _thread_worker(self, w):
        worker, jobs, events = self.workers[w], self.jobs[w], self.events
        while True:
            job = jobs.get()
            if job is None:
                return
            outcome = worker.run(job[0])
            events.put(("idle", w, outcome.value, time.perf_counter()))

    def _pump_endpoint(self):
        while True:
            item = self.endpoint.receive()
            if item is None:
                return
            self.events.put(("msg",) + tuple(item))

    def _pump_processes(self):
        while True:
            item = self._mp_events.get()
            if item is None:
                return
            self.events.put(item)

    def start(self) -> None:
        for w in range(self.config.workers):
            if self._procs:
                self._procs[w].start()
            else:
                t = threading.Thread(target=self._thread_worker, args=(w,), daemon=True,
                                     name=f"team-{self.config.team_id}-w{w}")
                t.start()
                self._threads.append(t)
        pumps = [self._pump_endpoint] + ([self._pump_processes] if self._procs else [])
        for fn in pumps:
            t = threading.Thread(target=fn, daemon=True)
            t.start()
            self._threads.append(t)
        self._ctl.start()

    def release(self, items: Sequence) -> None:
        self.events.put(("start", list(items)))

    def abort(self) -> None:
        self.events.put(("abort",))

    def join(self, timeout: Optional[float] = None) -> bool:
        self._ctl.join(timeout)
        return not self._ctl.is_alive()

    def _restart(self, items):
        for w, item in enumerate(items):
            self.jobs[w].put((item,))

    def _loop(self):
        ctrl = self.controller
        try:
            while not ctrl.closed:
                ev = self.events.get()
                kind = ev[0]
                if kind == "msg":
                    ctrl.message(ev[1], ev[2])
                elif kind == "idle":
                    _, w, outcome, returned_at = ev
                    if outcome == Outcome.STOPPED.value and ctrl.stop_set_at is not None:
                        self.stop_latencies.append(returned_at - ctrl.stop_set_at)
                    ctrl.worker_idle(w)
                elif kind == "solution":
                    ctrl.solution(ev[2])
                elif kind == "start":
                    ctrl.start(ev[1])
                elif kind == "stats":
                    self.worker_stats[ev[1]] = SearchStats.from_dict(ev[2])
                elif kind == "abort":
                    break
        except BaseException as exc:  # surfaced by the runner
            self.error = exc
            log.exception("team %s controller failed", self.config.team_id)
        finally:
            self._shutdown()

    def _shutdown(self):
        self.stop.set()
        for j in self.jobs:
            j.put(None)
        if self._procs:
            deadline = time.monotonic() + 10
            while any(s is None for s in self.worker_stats) and time.monotonic() < deadline:
                try:
                    ev = self.events.get(timeout=0.1)
                except queue.Empty:
                    continue
                if ev[0] == "stats":
                    self.worker_stats[ev[1]] = SearchStats.from_dict(ev[2])
            self._mp_events.put(None)
            for p in self._procs:
                p.join(5)
                if p.is_alive():
                    p.terminate()
        else:
            for t, w in zip(self._threads, self.workers):
                t.join(5)
            self.worker_stats = [w.stats for w in self.workers]
        self.endpoint.close()

    def report(self) -> dict:
        out = {"team": self.config.team_id}
        out.update(self.controller.report())
        out["workers"] = [(s or SearchStats()).as_dict() for s in self.worker_stats]
        out["stop_latencies"] = list(self.stop_latencies)
        return out


# -- run reports ---------------------------------------------------------------

@dataclass
class RunReport:
    mode: Mode
    teams: int
    workers: int
    inter: Strategy
    intra: Strategy
    solutions: list
    time_s: float
    team_reports: list = field(default_factory=list)
    discarded: int = 0
    trace: Optional[list] = None

    @property
    def count(self) -> int:
        return len(self.solutions)

    @property
    def duplicates(self) -> int:
        return len(self.solutions) - len(set(self.solutions))

    @property
    def first_solution(self):
        return self.solutions[0] if self.solutions else None

    def worker_stats(self) -> list[SearchStats]:
        return [SearchStats.from_dict(w) for t in self.team_reports for w in t["workers"]]

    @property
    def stats(self) -> SearchStats:
        total = SearchStats()
        for s in self.worker_stats():
            total.merge(s)
        return total

    @property
    def supplies(self) -> int:
        return sum(t["supplies_sent"] for t in self.team_reports)

    @property
    def stop_latencies(self) -> list:
        return [x for t in self.team_reports for x in t["stop_latencies"]]

    def as_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "teams": self.teams,
            "workers": self.workers,
            "inter": self.inter.value,
            "intra": self.intra.value,
            "count": self.count,
            "solutions": [list(s) for s in self.solutions],
            "time_s": self.time_s,
            "discarded": self.discarded,
            "team_reports": self.team_reports,
        }


def _solution_gate(problem: Problem):
    return lambda values: solution_check(values, problem)


def _empty_report(problem, teams, workers, mode, inter, intra) -> RunReport:
    return RunReport(Mode(mode), teams, workers, Strategy(inter), Strategy(intra), [], 0.0)


class _SwitchInterval:
    """Shorter GIL slices so worker threads notice STOP promptly."""

    def __init__(self, value):
        self.value = value

    def __enter__(self):
        self.saved = sys.getswitchinterval()
        if self.value is not None:
            sys.setswitchinterval(self.value)

    def __exit__(self, *exc):
        sys.setswitchinterval(self.saved)


def run_in_process(problem: Problem, teams: int = 1, workers: int = 1, mode: Mode = Mode.ALL,
                   inter: Strategy = Strategy.EVEN, intra: Strategy = Strategy.EVEN,
                   worker_config: WorkerConfig = WorkerConfig(), executor: Executor = Executor.THREAD,
                   timeout: float = 300.0, switch_interval: Optional[float] = 0.001) -> RunReport:
    """All teams in this process, connected by an ``InProcessHub``."""
    mode, inter, intra = Mode(mode), Strategy(inter), Strategy(intra)
    plan = bootstrap_plan(problem, teams, workers, inter, intra)
    hub = InProcessHub()
    main_ep = hub.endpoint(MAIN)
    main = MainController(teams, mode, main_ep.send, _solution_gate(problem))
    squad = [
        Team(TeamConfig(t, workers, intra, inter, worker_config, executor), problem, teams,
             hub.endpoint(t), mode, plan.key_var)
        for t in range(teams)
    ]
    with _SwitchInterval(switch_interval):
        for team in squad:
            team.start()
        t0 = time.perf_counter()
        for team, items in zip(squad, plan.parts):
            team.release(items)
        deadline = t0 + timeout
        try:
            while not main.done:
                item = main_ep.receive(timeout=max(deadline - time.perf_counter(), 0))
                if item is None:
                    raise RunTimeout(f"no termination after {timeout}s", _dump(main, squad))
                main.message(*item)
                failed = [t for t in squad if t.error is not None]
                if failed:
                    raise failed[0].error
        except BaseException:
            for team in squad:
                team.abort()
            for team in squad:
                team.join(5)
            raise
        elapsed = time.perf_counter() - t0
        for team in squad:
            if not team.join(30):
                raise RunTimeout("team did not shut down", _dump(main, squad))
    for team in squad:
        if team.error is not None:
            raise team.error
    main_ep.close()
    hub.assert_drained()
    return RunReport(mode, teams, workers, inter, intra, main.solutions, elapsed,
                     [t.report() for t in squad], main.discarded, hub.trace)


def _dump(main: MainController, squad) -> dict:
    return {"main": main.snapshot(), "teams": [t.controller.snapshot() for t in squad]}


# -- one OS process per team ---------------------------------------------------

def team_process_main(stdin=None, stdout=None) -> int:
    """Entry point of a spawned team.

    Reads its configuration (one JSON line), binds a socket, prints
    ``{"port": p}``, waits for the address table (second JSON line, also the
    start signal), runs, and prints its report as one JSON line.
    """
    from .models import ModelSpec

    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    cfg = json.loads(stdin.readline())
    problem = ModelSpec.from_dict(cfg["model"]).build()
    wc = cfg["worker"]
    worker_config = WorkerConfig(wc["safe_size"], _num(wc["threshold"]), wc["variable"], wc["value"])
    config = TeamConfig(cfg["team"], cfg["workers"], cfg["intra"], cfg["inter"], worker_config, cfg["executor"])
    endpoint = SocketEndpoint(cfg["team"], host=cfg.get("host", "127.0.0.1"))
    team = Team(config, problem, cfg["teams"], endpoint, cfg["mode"], cfg["key_var"])
    with _SwitchInterval(cfg.get("switch_interval")):
        team.start()
        print(json.dumps({"port": endpoint.address[1]}), file=stdout, flush=True)
        table = json.loads(stdin.readline())
        endpoint.addresses = {int(k): tuple(v) for k, v in table.items()}
        items = [tuple(p) if p is not None else None for p in cfg["parts"]]
        team.release(items)
        team.join()
    report = team.report()
    report["faulted"] = endpoint.faulted
    report["error"] = repr(team.error) if team.error else None
    print(json.dumps(report), file=stdout, flush=True)
    return 0 if team.error is None else 1


def _num(x):
    return math.inf if x in ("inf", None) else x


def _json_threshold(t):
    return "inf" if math.isinf(t) else t


def run_spawned(model, teams: int = 1, workers: int = 1, mode: Mode = Mode.ALL,
                inter: Strategy = Strategy.EVEN, intra: Strategy = Strategy.EVEN,
                worker_config: WorkerConfig = WorkerConfig(), executor: Executor = Executor.THREAD,
                timeout: float = 300.0, switch_interval: Optional[float] = 0.001,
                host: str = "127.0.0.1") -> RunReport:
    """One OS process per team, talking over loopback sockets.

    ``model`` is a ``ModelSpec`` so that team processes can rebuild the
    problem.  The main controller lives in the calling process.
    """
    mode, inter, intra, executor = Mode(mode), Strategy(inter), Strategy(intra), Executor(executor)
    problem = model.build()
    plan = bootstrap_plan(problem, teams, workers, inter, intra)
    endpoint = SocketEndpoint(MAIN, host=host)
    main = MainController(teams, mode, endpoint.send, _solution_gate(problem))
    wc = worker_config
    procs = []
    env = dict(os.environ)
    src_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    env["PYTHONPATH"] = os.pathsep.join(filter(None, [src_root, env.get("PYTHONPATH")]))
    try:
        for t in range(teams):
            cfg = {
                "team": t, "teams": teams, "workers": workers, "model": model.as_dict(),
                "mode": mode.value, "inter": inter.value, "intra": intra.value,
                "executor": executor.value, "key_var": plan.key_var, "host": host,
                "switch_interval": switch_interval,
                "worker": {"safe_size": wc.safe_size, "threshold": _json_threshold(wc.threshold),
                           "variable": wc.variable.value, "value": wc.value.value},
                "parts": [list(p) if p is not None else None for p in plan.parts[t]],
            }
            p = subprocess.Popen([sys.executable, "-m", "stealcsp.cli", "team-process"],
                                 stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, env=env)
            p.stdin.write(json.dumps(cfg) + "\n")
            p.stdin.flush()
            procs.append(p)
        table = {str(MAIN): list(endpoint.address)}
        for t, p in enumerate(procs):
            line = p.stdout.readline()
            if not line:
                raise RuntimeError(f"team process {t} exited during startup")
            table[str(t)] = [host, json.loads(line)["port"]]
        endpoint.addresses = {int(k): tuple(v) for k, v in table.items()}
        t0 = time.perf_counter()
        for p in procs:
            p.stdin.write(json.dumps(table) + "\n")
            p.stdin.flush()
        deadline = t0 + timeout
        while not main.done:
            item = endpoint.receive(timeout=max(deadline - time.perf_counter(), 0))
            if item is None:
                raise RunTimeout(f"no termination after {timeout}s",
                                 {"main": main.snapshot(), "faulted": endpoint.faulted})
            main.message(*item)
        elapsed = time.perf_counter() - t0
        reports = []
        for t, p in enumerate(procs):
            out, _ = p.communicate(timeout=60)
            report = json.loads(out.strip().splitlines()[-1])
            if p.returncode != 0:
                raise RuntimeError(f"team process {t} failed: {report.get('error')}")
            reports.append(report)
    finally:
        for p in procs:
            if p.poll() is None:
                p.kill()
                p.wait()
        endpoint.close()
    return RunReport(mode, teams, workers, inter, intra, main.solutions, elapsed, reports, main.discarded)
