import csv
import json
from pathlib import Path
from typing import Any, Dict, Optional

import pytest

from pyrbso.cli import emit_paper_scenario, experiment, main
from pyrbso.cli.experiment import (
    SUMMARY_HEADER,
    ExperimentConfig,
    SummaryRow,
    check_outputs,
    parse_seeds,
    read_summary,
    run_experiment,
    sign_test,
    summarize,
)
from pyrbso.cli.tracing import read_trace, trace_path
from pyrbso.commons.errors import ExperimentError, ProgrammingError
from pyrbso.engine import RunResult, SimParams, run
from pyrbso.env.world import EnvironmentSpec
from pyrbso.trace import TraceSink

## Define a small scenario:
small: Dict[str, Any] = {
    "arena": {"width": 200, "height": 200},
    "obstacles": [{"min": [90, 90], "max": [110, 110]}],
    "targets": [[40, 60], [150, 160]],
    "robots_random": {"count": 4},
    "rbso": {"T_g": 300, "m_s": 50},
    "seed": 0,
}


@pytest.fixture()
def scenario(tmp_path: Path) -> Path:
    path = tmp_path / "small.json"
    path.write_text(json.dumps(small), encoding="utf-8")
    return path


def test_emit_scenario(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    path = tmp_path / "reference.json"
    assert main(["emit-scenario", str(path)]) == 0
    assert json.loads(path.read_text(encoding="utf-8")) == emit_paper_scenario()

    assert main(["emit-scenario"]) == 0
    assert json.loads(capsys.readouterr().out) == emit_paper_scenario()


def test_run_and_check(scenario: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    first, again = tmp_path / "first", tmp_path / "again"
    for out in (first, again):
        assert main(["run", str(scenario), "--seeds", "1..2", "--out", str(out), "--trace", "full"]) == 0
    assert "runs: 2 (failed: 0)" in capsys.readouterr().out

    ## Summaries and traces are byte-identical across runs:
    assert (first / "summary.csv").read_bytes() == (again / "summary.csv").read_bytes()
    for seed in (1, 2):
        assert trace_path(first, seed).read_bytes() == trace_path(again, seed).read_bytes()

    ## Full traces have one record per robot per tick:
    rows = read_summary(first / "summary.csv")
    assert [row.seed for row in rows] == [1, 2]
    for row in rows:
        assert row.ok
        assert row.total_steps <= 300
        assert len(read_trace(trace_path(first, row.seed))) == row.total_steps * 4

    ## Wall times are kept apart:
    with (first / "timings.csv").open(encoding="utf-8", newline="") as stream:
        assert next(csv.reader(stream)) == ["seed", "wall_time"]

    ## The check passes, and fails on a missing trace:
    assert main(["check", str(first)]) == 0
    trace_path(first, 2).unlink()
    assert main(["check", str(first)]) == 2
    assert "missing trace file" in capsys.readouterr().err


def test_parallel_run(scenario: Path, tmp_path: Path) -> None:
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    assert main(["run", str(scenario), "--seeds", "1,2,3", "--out", str(serial)]) == 0
    assert main(["run", str(scenario), "--seeds", "1,2,3", "--out", str(parallel), "--jobs", "2"]) == 0
    assert (serial / "summary.csv").read_bytes() == (parallel / "summary.csv").read_bytes()


def test_event_traces(scenario: Path, tmp_path: Path) -> None:
    out = tmp_path / "events"
    assert main(["run", str(scenario), "--seed", "4", "--out", str(out), "--trace", "events"]) == 0
    records = read_trace(trace_path(out, 4))
    assert all(r.is_event for r in records)
    assert check_outputs(out) == []


def test_random_walk_mode(scenario: Path, tmp_path: Path) -> None:
    out = tmp_path / "walk"
    assert main(["run", str(scenario), "--mode", "random-walk", "--out", str(out)]) == 0
    (row,) = read_summary(out / "summary.csv")
    assert (row.seed, row.mode, row.status) == (0, "random-walk", "ok")


def test_failed_runs_are_recorded(tmp_path: Path) -> None:
    crowded = {
        "arena": {"width": 10, "height": 10},
        "obstacles": [{"min": [1, 1], "max": [9, 9]}],
        "robots_random": {"count": 2},
    }
    path = tmp_path / "crowded.json"
    path.write_text(json.dumps(crowded), encoding="utf-8")
    config = ExperimentConfig.of(str(path), [0], out=str(tmp_path / "out"))
    (row,) = run_experiment(config)
    assert row.status == "failed"
    assert "robots" in row.error
    assert summarize([row]).failed == 1


def test_broken_invariants_fail_one_seed(scenario: Path, tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    def broken(env: EnvironmentSpec, params: SimParams, sink: Optional[TraceSink] = None) -> RunResult:
        ProgrammingError.passert(params.seed != 1, "Targets must be conserved")
        return run(env, params, sink)

    monkeypatch.setattr(experiment, "run", broken)
    rows = run_experiment(ExperimentConfig.of(str(scenario), [0, 1, 2], out=str(tmp_path / "out")))

    ## The broken seed is recorded, the others carry on:
    assert [(row.seed, row.status) for row in rows] == [(0, "ok"), (1, "failed"), (2, "ok")]
    assert "Targets must be conserved" in rows[1].error
    assert [row.seed for row in read_summary(tmp_path / "out" / "summary.csv")] == [0, 1, 2]


def test_exit_codes(scenario: Path, tmp_path: Path) -> None:
    ## Empty seed lists and invalid configurations:
    assert main(["run", str(scenario), "--seeds", "5..1"]) == 2
    assert main(["run", str(scenario), "--trace", "full"]) == 2

    ## Missing scenario files:
    assert main(["run", str(tmp_path / "missing.json")]) == 1

    ## Invalid scenarios:
    invalid = tmp_path / "invalid.json"
    invalid.write_text(json.dumps({**small, "signal": {"a": -1}}), encoding="utf-8")
    assert main(["run", str(invalid)]) == 2
    assert main(["run", str(scenario), "--set", "rbso.m_s=0"]) == 2


def test_seed_lists() -> None:
    assert parse_seeds("0..3") == (0, 1, 2, 3)
    assert parse_seeds("4,2") == (4, 2)
    with pytest.raises(ExperimentError):
        parse_seeds("a..b")
    with pytest.raises(ExperimentError):
        ExperimentConfig.of("small.json", [1, 1])
    with pytest.raises(ExperimentError):
        ExperimentConfig.of("small.json", [-1])
    with pytest.raises(ExperimentError):
        ExperimentConfig.of("small.json", [1], jobs=0)


def test_summary_rows() -> None:
    row = SummaryRow(3, "rbso", "ok", 2, 3, False, 500, 4, ((2, 10), (0, 480)), 12.5)
    cells = row.cells()
    assert len(cells) == len(SUMMARY_HEADER)
    assert cells[5] == "false"
    assert cells[8] == "2:10;0:480"
    assert cells[9] == "12.500000"
    assert SummaryRow.of_cells(cells) == row
    assert row.found_by(100) == 1
    assert row.all_found_step is None


def test_sign_test() -> None:
    assert sign_test([3, 3, 3], [1, 1, 1]) == pytest.approx(0.125)
    assert sign_test([1, 1, 1], [3, 3, 3]) == pytest.approx(1.0)
    assert sign_test([2, 5, 1], [2, 3, 1]) == pytest.approx(0.5)
    with pytest.raises(ExperimentError):
        sign_test([1], [1, 2])
