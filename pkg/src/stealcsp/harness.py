"""Single-threaded, seeded scheduler for protocol tests.

Every team's controller and every worker live in one thread.  Workers run as
generators (one ``next`` per search node) and messages sit in a manual
``InProcessHub`` until the scheduler delivers them, so one random seed picks
one interleaving of worker steps and message deliveries.
"""
from __future__ import annotations

import random

from .core import Problem, solution_check, store_solution
from .partition import Strategy
from .propagation import Engine
from .team import Controller, MainController, Role, bootstrap_plan
from .transport import MAIN, InProcessHub
from .worker import Flag, Mode, TeamPools, Worker, WorkerConfig


class _TeamSim:
    def __init__(self, sim, t, endpoint, workers):
        self.t = t
        self.endpoint = endpoint
        self.pools = TeamPools.local(workers)
        self.stop = Flag()
        self.gens: list = [None] * workers
        self.steps_after_stop = [0] * workers
        self.workers = [
            Worker(w, sim.engine, self.pools, sim.worker_config, sim.mode,
                   emit=lambda s: self.controller.solution(store_solution(s)),
                   stop=self.stop, key_var=sim.plan.key_var)
            for w in range(workers)
        ]
        self.controller = Controller(
            t, sim.n_teams, workers, self.pools,
            send=endpoint.send, restart=self._restart, stop_workers=self.stop.set,
            intra=sim.intra, threshold=sim.worker_config.threshold, clock=sim.clock)

    def _restart(self, items):
        for w, item in enumerate(items):
            self.gens[w] = self.workers[w].steps(item)


class Simulation:
    """``run()`` drives the whole system to termination.

    Invariants checked after every action: at most one team holds the
    SUPPLIER role (recorded in ``max_suppliers``); a team that starts a
    request round has no pool at or above the steal threshold.
    """

    def __init__(self, problem: Problem, teams: int, workers: int, mode: Mode = Mode.ALL,
                 inter: Strategy = Strategy.EVEN, intra: Strategy = Strategy.EVEN,
                 worker_config: WorkerConfig = WorkerConfig(), seed: int = 0,
                 deliver_bias: float = 0.5):
        self.problem = problem
        self.n_teams = teams
        self.mode = Mode(mode)
        self.intra = Strategy(intra)
        self.worker_config = worker_config
        self.rng = random.Random(seed)
        self.deliver_bias = deliver_bias
        self.tick = 0
        self.engine = Engine(problem)
        self.plan = bootstrap_plan(problem, teams, workers, inter, intra)
        self.hub = InProcessHub(manual=True)
        self.main_ep = self.hub.endpoint(MAIN)
        self.main = MainController(teams, self.mode, self.main_ep.send,
                                   lambda v: solution_check(v, problem))
        self.teams = [_TeamSim(self, t, self.hub.endpoint(t), workers) for t in range(teams)]
        self.max_suppliers = 0
        self.draining_violations = 0
        self.actions = 0

    def clock(self):
        return self.tick

    def _suppliers(self):
        return sum(1 for ts in self.teams if ts.controller.role is Role.SUPPLIER)

    def _running(self):
        return [(ts, w) for ts in self.teams for w, g in enumerate(ts.gens) if g is not None]

    def _step(self, ts, w):
        ctrl = ts.controller
        if ts.stop.is_set():
            ts.steps_after_stop[w] += 1
        try:
            next(ts.gens[w])
        except StopIteration:
            ts.gens[w] = None
            if len(ctrl.idle) + 1 == ctrl.workers and not ctrl.stopping:
                # about to start a request round: nothing stealable may remain
                if any(s >= ctrl.threshold for s in ts.pools.sizes()):
                    self.draining_violations += 1
            ctrl.worker_idle(w)

    def _deliver(self, src, dst):
        self.hub.deliver(src, dst)
        if dst == MAIN:
            self.main.message(*self.main_ep.receive(0))
        else:
            ts = self.teams[dst]
            ts.controller.message(*ts.endpoint.receive(0))

    def run(self, max_actions: int = 5_000_000) -> list:
        for ts, items in zip(self.teams, self.plan.parts):
            ts.controller.start(items)
        while self.actions < max_actions:
            self.tick += 1
            running = self._running()
            pending = self.hub.pending()
            if not running and not pending:
                break
            self.actions += 1
            if pending and (not running or self.rng.random() < self.deliver_bias):
                self._deliver(*self.rng.choice(pending))
            else:
                self._step(*self.rng.choice(running))
            self.max_suppliers = max(self.max_suppliers, self._suppliers())
        else:
            raise RuntimeError(f"no termination after {max_actions} actions")
        if not self.main.done:
            raise RuntimeError(f"system went quiet without terminating: {self.main.snapshot()}")
        self.hub.assert_drained()
        return self.main.solutions

    def max_steps_after_stop(self) -> int:
        return max(max(ts.steps_after_stop) for ts in self.teams)

    @property
    def trace(self):
        return self.hub.trace
