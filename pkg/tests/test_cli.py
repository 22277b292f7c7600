import csv
import json
import math
import subprocess
import sys

import pytest

from stealcsp.cli import CSV_HEADER, SPLIT_HEADER, RunConfig, build_parser, emit_stats, main, read_stats, run
from stealcsp.models import queens


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_queens8_sequential(capsys):
    code, out, _ = run_cli(capsys, "--model", "queens", "--n", "8", "--teams", "1", "--workers", "1",
                           "--mode", "all", "--json")
    assert code == 0
    assert json.loads(out)["count"] == 92


@pytest.mark.parametrize("teams, workers", [(1, 4), (2, 2), (4, 1)])
def test_configurations_agree(capsys, teams, workers):
    code, out, _ = run_cli(capsys, "--model", "langford", "--k", "2", "--n", "7",
                           "--teams", str(teams), "--workers", str(workers), "--json")
    assert code == 0 and json.loads(out)["count"] == 26


def test_stats_csv(tmp_path, capsys):
    path = tmp_path / "out.csv"
    code, _, _ = run_cli(capsys, "--model", "queens", "--n", "7", "--stats", str(path))
    assert code == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == CSV_HEADER
    assert rows[3] == SPLIT_HEADER
    run_row, splits = read_stats(str(path))
    assert run_row["config"] == "1x1" and run_row["model"] == "queens-7"
    assert int(run_row["solutions"]) == 40
    assert int(run_row["steals_ok"]) == 0 and int(run_row["supplies"]) == 0
    assert abs(sum(float(r["percent"]) for r in splits) - 100) <= 0.1
    assert [int(r["first_split_value"]) for r in splits] == list(range(7))
    assert sum(int(r["nodes"]) for r in splits) == int(run_row["nodes"])


def test_stats_parallel_run(tmp_path):
    config = RunConfig(queens(7), teams=2, workers=2, stats_path=str(tmp_path / "s.csv"))
    report = run(config)
    emit_stats(report, config.stats_path, config)
    run_row, splits = read_stats(config.stats_path)
    assert int(run_row["solutions"]) == report.count == 40
    assert run_row["config"] == "2x2"
    assert abs(sum(float(r["percent"]) for r in splits) - 100) <= 0.1


def test_unwritable_stats_path(tmp_path):
    config = RunConfig(queens(5))
    with pytest.raises(OSError):
        emit_stats(run(config), str(tmp_path / "missing" / "s.csv"), config)


def test_first_mode_prints_solution(capsys):
    code, out, _ = run_cli(capsys, "--model", "queens", "--n", "10", "--mode", "first", "--teams", "2")
    assert code == 0
    assert "1 solution(s)" in out and "first solution:" in out


@pytest.mark.parametrize("argv", [
    ["--model", "queens"],
    ["--model", "golomb", "--marks", "5"],
    ["--model", "langford"],
    ["--model", "queens", "--n", "3"],
    ["--model", "queens", "--n", "8", "--teams", "0"],
    ["--model", "queens", "--n", "8", "--inter", "prime"],
    ["--model", "queens", "--n", "8", "--threshold", "0"],
    ["--model", "queens", "--n", "8", "--safe-size", "1", "--threshold", "3"],
    ["--model", "sudoku"],
])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as err:
        main(argv)
    assert err.value.code == 2


def test_timeout_exit_3(capsys):
    code, _, err = run_cli(capsys, "--model", "queens", "--n", "14", "--teams", "2", "--timeout", "0.05")
    assert code == 3
    assert "no termination" in err and '"teams"' in err


def test_threshold_parsing():
    args = build_parser().parse_args(["--model", "queens", "--n", "8", "--threshold", "inf"])
    assert math.isinf(args.threshold)


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(queens(8), teams=0)
    with pytest.raises(ValueError):
        RunConfig(queens(8), backend="carrier-pigeon")


def test_spawned_teams_from_console(tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "stealcsp.cli", "--model", "queens", "--n", "6", "--teams", "2",
         "--workers", "2", "--spawn", "--json", "--stats", str(tmp_path / "s.csv")],
        capture_output=True, text=True, timeout=120)
    assert out.returncode == 0, out.stderr
    assert json.loads(out.stdout)["count"] == 4
    run_row, _ = read_stats(str(tmp_path / "s.csv"))
    assert int(run_row["solutions"]) == 4
