"""Command line front end.

    stealcsp --model queens --n 8 --teams 2 --workers 2 --mode all
    stealcsp --model golomb --marks 10 --length 55 --stats out.csv
    stealcsp --model langford --k 2 --n 11 --mode first --spawn

Exit status: 0 on a completed run, 3 on timeout, 1 on any other failure,
2 on bad arguments.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import random
import sys
from dataclasses import dataclass, field
from typing import Optional

from .models import ModelSpec, golomb, langford, queens
from .partition import PartitionError, Strategy
from .team import Executor, RunReport, RunTimeout, run_in_process, run_spawned, team_process_main
from .worker import Mode, ValueHeuristic, VarHeuristic, WorkerConfig

CSV_HEADER = ["config", "model", "mode", "teams", "workers", "strategy_inter", "strategy_intra",
              "solutions", "nodes", "steals_ok", "steals_fail", "supplies", "time_ms"]
SPLIT_HEADER = ["first_split_value", "nodes", "percent"]


@dataclass
class RunConfig:
    model: ModelSpec
    mode: Mode = Mode.ALL
    teams: int = 1
    workers: int = 1
    inter: Strategy = Strategy.EVEN
    intra: Strategy = Strategy.EVEN
    worker: WorkerConfig = field(default_factory=WorkerConfig)
    backend: str = "in-process"
    executor: Executor = Executor.THREAD
    timeout: float = 300.0
    stats_path: Optional[str] = None

    def __post_init__(self):
        if self.teams < 1 or self.workers < 1:
            raise ValueError("teams and workers must be at least 1")
        if self.backend not in ("in-process", "spawn"):
            raise ValueError(f"unknown backend {self.backend!r}")
        self.mode = Mode(self.mode)
        self.inter = Strategy(self.inter)
        self.intra = Strategy(self.intra)
        self.executor = Executor(self.executor)

    @property
    def label(self) -> str:
        return f"{self.teams}x{self.workers}"


def run(config: RunConfig) -> RunReport:
    kwargs = dict(teams=config.teams, workers=config.workers, mode=config.mode, inter=config.inter,
                  intra=config.intra, worker_config=config.worker, executor=config.executor,
                  timeout=config.timeout)
    if config.backend == "spawn":
        return run_spawned(config.model, **kwargs)
    return run_in_process(config.model.build(), **kwargs)


def emit_stats(report: RunReport, path: str, config: RunConfig) -> None:
    stats = report.stats
    total = sum(stats.subtree_nodes.values())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        w.writerow([
            config.label, config.model.label(), report.mode.value, report.teams, report.workers,
            report.inter.value, report.intra.value, report.count, stats.nodes,
            stats.steals_succeeded, stats.steals_attempted - stats.steals_succeeded,
            report.supplies, round(report.time_s * 1000, 3),
        ])
        w.writerow([])
        w.writerow(SPLIT_HEADER)
        for value, nodes in sorted(stats.subtree_nodes.items()):
            w.writerow([value, nodes, f"{100 * nodes / total:.4f}"])


def read_stats(path: str) -> tuple[dict, list[dict]]:
    """Parse a file written by ``emit_stats`` back into (run row, split rows)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    run_row = dict(zip(rows[0], rows[1]))
    split_rows = [dict(zip(rows[3], r)) for r in rows[4:] if r]
    return run_row, split_rows


def _threshold(text: str) -> float:
    if text.lower() in ("inf", "infinity", "none"):
        return math.inf
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("threshold must be at least 1")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stealcsp", description="Parallel finite-domain search with work stealing.")
    p.add_argument("--model", choices=["queens", "golomb", "langford"], required=True)
    p.add_argument("--n", type=int, help="queens: board size; langford: number of symbols")
    p.add_argument("--k", type=int, default=2, help="langford: copies of each symbol")
    p.add_argument("--marks", type=int, help="golomb: number of marks")
    p.add_argument("--length", type=int, help="golomb: ruler length")
    p.add_argument("--no-symmetry", action="store_true", help="langford: keep mirror-image sequences")
    p.add_argument("--mode", choices=[m.value for m in Mode], default="all")
    p.add_argument("--teams", type=_positive, default=1)
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--inter", choices=[s.value for s in Strategy], default="even")
    p.add_argument("--intra", choices=[s.value for s in Strategy], default="even")
    p.add_argument("--safe-size", type=_positive, default=4)
    p.add_argument("--threshold", type=_threshold, default=2, help="integer, or 'inf' to disable stealing")
    p.add_argument("--var-heuristic", choices=[h.value for h in VarHeuristic], default="lex-first")
    p.add_argument("--val-heuristic", choices=[h.value for h in ValueHeuristic], default="min-value")
    backend = p.add_mutually_exclusive_group()
    backend.add_argument("--in-process", dest="backend", action="store_const", const="in-process")
    backend.add_argument("--spawn", dest="backend", action="store_const", const="spawn",
                         help="one OS process per team, connected over loopback sockets")
    p.set_defaults(backend="in-process")
    p.add_argument("--executor", choices=[e.value for e in Executor], default="thread",
                   help="run each team's workers as threads or as processes")
    p.add_argument("--timeout", type=float, default=300.0, help="seconds before the run is aborted")
    p.add_argument("--stats", metavar="PATH", help="write the statistics CSV here")
    p.add_argument("--json", action="store_true", help="print the full report as JSON")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args, parser) -> RunConfig:
    if args.model == "queens":
        if args.n is None:
            parser.error("--model queens needs --n")
        model = queens(args.n)
    elif args.model == "golomb":
        if args.marks is None or args.length is None:
            parser.error("--model golomb needs --marks and --length")
        model = golomb(args.marks, args.length)
    else:
        if args.n is None:
            parser.error("--model langford needs --n")
        model = langford(args.k, args.n, not args.no_symmetry)
    try:
        worker = WorkerConfig(args.safe_size, args.threshold, args.var_heuristic, args.val_heuristic)
        model.build()
    except ValueError as exc:
        parser.error(str(exc))
    return RunConfig(model, args.mode, args.teams, args.workers, args.inter, args.intra, worker,
                     args.backend, args.executor, args.timeout, args.stats)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv[:1] == ["team-process"]:
        return team_process_main()
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    seed = os.environ.get("STEALCSP_SEED")
    if seed is not None:
        random.seed(int(seed))
    config = config_from_args(args, parser)
    try:
        report = run(config)
    except RunTimeout as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(json.dumps(exc.dump, indent=2, default=str), file=sys.stderr)
        return 3
    except PartitionError as exc:
        print(f"error: cannot partition: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # protocol faults, dead team processes
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if config.stats_path:
        emit_stats(report, config.stats_path, config)
    if args.json:
        print(json.dumps(report.as_dict()))
    else:
        print(f"{config.model.label()} {config.label} {report.mode.value}: "
              f"{report.count} solution(s), {report.stats.nodes} nodes, {report.time_s * 1000:.1f} ms")
        if report.mode is Mode.FIRST and report.first_solution is not None:
            print("first solution:", " ".join(map(str, report.first_solution)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
