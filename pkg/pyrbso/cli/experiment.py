"""
This module provides the batch experiment harness: seed sweeps over a scenario, summary and timing tables, trace
files, aggregate statistics, consistency checks between summaries and traces, and the paired sign test.

``summary.csv`` has the header::

    seed,mode,status,targets_found,targets_total,all_found,total_steps,iterations,find_steps,total_path_length,error

where ``find_steps`` lists ``target:step`` pairs in order of detection, separated by ``;``. Wall times are kept apart
in ``timings.csv`` (``seed,wall_time``), so that summaries of identical runs are byte-identical.
"""

__all__ = [
    "Aggregate",
    "ExperimentConfig",
    "Mode",
    "SUMMARY_HEADER",
    "SummaryRow",
    "check_outputs",
    "parse_find_steps",
    "parse_seeds",
    "read_summary",
    "run_experiment",
    "run_seed",
    "sign_test",
    "summarize",
]

import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binomtest

from ..commons.errors import ExperimentError, ProgrammingError
from ..engine import RunResult, run, run_random_walk_baseline
from ..env.scenario import read_scenario
from .tracing import JsonLinesSink, Verbosity, found_events, read_trace, trace_path

#: Defines the module logger.
logger = logging.getLogger(__name__)

#: Defines the fixed header of summary tables.
SUMMARY_HEADER = (
    "seed",
    "mode",
    "status",
    "targets_found",
    "targets_total",
    "all_found",
    "total_steps",
    "iterations",
    "find_steps",
    "total_path_length",
    "error",
)


class Mode(Enum):
    """
    Provides an enumeration of search modes.
    """

    #: Robotic Brain Storm Optimization.
    RBSO = "rbso"

    #: Random-walk baseline.
    RANDOM_WALK = "random-walk"


def parse_seeds(text: str) -> Tuple[int, ...]:
    """
    Parses a seed list: a single seed, an inclusive range ``A..B`` or a comma separated list.

    >>> parse_seeds("7")
    (7,)
    >>> parse_seeds("1..4")
    (1, 2, 3, 4)
    >>> parse_seeds("3, 1, 2")
    (3, 1, 2)
    >>> parse_seeds("5..1")
    Traceback (most recent call last):
    ...
    pyrbso.commons.errors.ExperimentError: Empty seed list: '5..1'
    """
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            seeds = tuple(range(int(lo), int(hi) + 1))
        else:
            seeds = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise ExperimentError(f"Invalid seed list: '{text}'") from exc
    if not seeds:
        raise ExperimentError(f"Empty seed list: '{text}'")
    return seeds


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Defines a batch experiment.
    """

    #: Path to the scenario file.
    scenario: Path

    #: Seeds to run, in output order.
    seeds: Tuple[int, ...]

    #: Search mode.
    mode: Mode = Mode.RBSO

    #: Output directory (no files are written if ``None``).
    out: Optional[Path] = None

    #: Trace verbosity.
    trace: Verbosity = Verbosity.NONE

    #: Scenario overrides as ``dotted.path=value`` expressions.
    overrides: Tuple[str, ...] = ()

    #: Number of worker processes.
    jobs: int = 1

    #: Step at which the number of found targets is reported.
    checkpoint: int = 8000

    @classmethod
    def of(
        cls,
        scenario: str,
        seeds: Sequence[int],
        mode: str = "rbso",
        out: Optional[str] = None,
        trace: str = "none",
        overrides: Sequence[str] = (),
        jobs: int = 1,
        checkpoint: int = 8000,
    ) -> "ExperimentConfig":
        """
        Creates a validated experiment configuration.

        >>> ExperimentConfig.of("scenario.json", [1, 2], trace="full", out="out").trace
        <Verbosity.FULL: 'full'>
        >>> ExperimentConfig.of("scenario.json", [])
        Traceback (most recent call last):
        ...
        pyrbso.commons.errors.ExperimentError: At least one seed is required
        """
        if not seeds:
            raise ExperimentError("At least one seed is required")
        if any(s < 0 for s in seeds):
            raise ExperimentError("Seeds must not be negative")
        if len(set(seeds)) != len(seeds):
            raise ExperimentError("Seeds must be unique")
        try:
            mode_ = Mode(mode)
            trace_ = Verbosity(trace)
        except ValueError as exc:
            raise ExperimentError(str(exc)) from exc
        if trace_ is not Verbosity.NONE and out is None:
            raise ExperimentError("Trace files require an output directory")
        if jobs < 1:
            raise ExperimentError("Number of jobs must be at least 1")
        if checkpoint < 0:
            raise ExperimentError("Checkpoint must not be negative")
        target = None if out is None else Path(out)
        return cls(Path(scenario), tuple(seeds), mode_, target, trace_, tuple(overrides), jobs, checkpoint)


class SummaryRow(NamedTuple):
    """
    Defines one row of the summary table.
    """

    seed: int
    mode: str
    status: str
    targets_found: int
    targets_total: int
    all_found: bool
    total_steps: int
    iterations: int
    find_steps: Tuple[Tuple[int, int], ...]
    total_path_length: float
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def all_found_step(self) -> Optional[int]:
        if not (self.ok and self.all_found):
            return None
        return self.find_steps[-1][1] if self.find_steps else 0

    def found_by(self, step: int) -> int:
        return sum(1 for _, s in self.find_steps if s <= step)

    def cells(self) -> List[str]:
        """
        Returns the CSV cells of the row.
        """
        return [
            str(self.seed),
            self.mode,
            self.status,
            str(self.targets_found),
            str(self.targets_total),
            "true" if self.all_found else "false",
            str(self.total_steps),
            str(self.iterations),
            ";".join(f"{t}:{s}" for t, s in self.find_steps),
            f"{self.total_path_length:.6f}",
            self.error,
        ]

    @classmethod
    def of_result(cls, seed: int, mode: Mode, result: RunResult) -> "SummaryRow":
        return cls(
            seed,
            mode.value,
            "ok",
            len(result.events),
            result.targets_total,
            result.all_found,
            result.total_steps,
            len(result.iterations),
            tuple(result.targets_found),
            result.total_path_length,
        )

    @classmethod
    def failed(cls, seed: int, mode: Mode, error: str) -> "SummaryRow":
        return cls(seed, mode.value, "failed", 0, 0, False, 0, 0, (), 0.0, error)

    @classmethod
    def of_cells(cls, cells: Sequence[str]) -> "SummaryRow":
        """
        Parses the CSV cells of a row.
        """
        if len(cells) != len(SUMMARY_HEADER):
            raise ExperimentError(f"Summary row must have {len(SUMMARY_HEADER)} cells, got {len(cells)}")
        return cls(
            int(cells[0]),
            cells[1],
            cells[2],
            int(cells[3]),
            int(cells[4]),
            cells[5] == "true",
            int(cells[6]),
            int(cells[7]),
            parse_find_steps(cells[8]),
            float(cells[9]),
            cells[10],
        )


def parse_find_steps(text: str) -> Tuple[Tuple[int, int], ...]:
    """
    Parses the ``find_steps`` cell.

    >>> parse_find_steps("3:120;0:455")
    ((3, 120), (0, 455))
    >>> parse_find_steps("")
    ()
    """
    return tuple((int(t), int(s)) for t, s in (pair.split(":") for pair in text.split(";") if pair))


def run_seed(config: ExperimentConfig, seed: int) -> Tuple[SummaryRow, float]:
    """
    Runs one seed of the experiment, writing its trace file if requested.

    Failures of the run are recorded in the returned row.

    :return: Summary row and wall time in seconds.
    """
    started = time.perf_counter()
    runner = run if config.mode is Mode.RBSO else run_random_walk_baseline
    try:
        env, params = read_scenario(config.scenario, [*config.overrides, f"seed={seed}"])
        if config.out is not None and config.trace is not Verbosity.NONE:
            with trace_path(config.out, seed).open("w", encoding="utf-8", newline="\n") as stream:
                result = runner(env, params, JsonLinesSink(stream, config.trace))
        else:
            result = runner(env, params)
        row = SummaryRow.of_result(seed, config.mode, result)
        logger.info("Seed %d done: %d/%d targets", seed, row.targets_found, row.targets_total)
    except (ValueError, RuntimeError, ProgrammingError) as exc:
        logger.warning("Seed %d failed: %s", seed, exc)
        row = SummaryRow.failed(seed, config.mode, str(exc))
    return row, time.perf_counter() - started


def _run_seed(args: Tuple[ExperimentConfig, int]) -> Tuple[SummaryRow, float]:
    return run_seed(*args)


def run_experiment(config: ExperimentConfig) -> List[SummaryRow]:
    """
    Runs every seed of the experiment and writes ``summary.csv`` and ``timings.csv`` into the output directory.

    Seeds run in ``config.jobs`` worker processes. Rows are reported in seed list order regardless of completion
    order.

    :param config: Experiment configuration.
    :return: Summary rows.
    :raises OSError: If the output directory can not be written.
    """
    ## Prepare the output directory:
    if config.out is not None:
        config.out.mkdir(parents=True, exist_ok=True)

    ## Run seeds:
    tasks = [(config, seed) for seed in config.seeds]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(config.jobs, len(tasks))) as executor:
            outcomes = list(executor.map(_run_seed, tasks))
    else:
        outcomes = [_run_seed(task) for task in tasks]
    rows = [row for row, _ in outcomes]

    ## Write tables:
    if config.out is not None:
        with (config.out / "summary.csv").open("w", encoding="utf-8", newline="") as stream:
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(SUMMARY_HEADER)
            writer.writerows(row.cells() for row in rows)
        with (config.out / "timings.csv").open("w", encoding="utf-8", newline="") as stream:
            writer = csv.writer(stream, lineterminator="\n")
            writer.writerow(("seed", "wall_time"))
            writer.writerows((row.seed, f"{wall:.3f}") for row, wall in outcomes)

    ## Done, return rows:
    return rows


def read_summary(path: Path) -> List[SummaryRow]:
    """
    Reads a summary table.

    :raises OSError: If the file can not be read.
    :raises ExperimentError: If the table is malformed.
    """
    with path.open(encoding="utf-8", newline="") as stream:
        reader = csv.reader(stream)
        header = next(reader, None)
        if header is None or tuple(header) != SUMMARY_HEADER:
            raise ExperimentError(f"Unexpected summary header in {path}")
        try:
            return [SummaryRow.of_cells(cells) for cells in reader]
        except ValueError as exc:
            raise ExperimentError(f"Malformed summary row in {path}: {exc}") from exc


def check_outputs(directory: Path) -> List[str]:
    """
    Cross-checks ``summary.csv`` against the trace files of the directory.

    Traces must be written with ``events`` verbosity or above.

    :return: List of inconsistencies (empty if consistent).
    """
    problems: List[str] = []
    for row in read_summary(directory / "summary.csv"):
        if not row.ok:
            continue
        path = trace_path(directory, row.seed)
        if not path.exists():
            problems.append(f"seed {row.seed}: missing trace file {path.name}")
            continue
        records = read_trace(path)
        if any(a.step > b.step for a, b in zip(records, records[1:])):
            problems.append(f"seed {row.seed}: trace steps decrease")
        if records and records[-1].step > row.total_steps:
            problems.append(f"seed {row.seed}: trace runs past step {row.total_steps}")
        if tuple(found_events(records)) != row.find_steps:
            problems.append(f"seed {row.seed}: found events differ from the summary")
        if row.targets_found != len(row.find_steps) or row.all_found != (row.targets_found == row.targets_total):
            problems.append(f"seed {row.seed}: summary counts are inconsistent")
    return problems


class Aggregate(NamedTuple):
    """
    Defines aggregate statistics of a batch.
    """

    #: Number of runs.
    runs: int

    #: Number of failed runs.
    failed: int

    #: Fraction of runs which found all targets.
    success_rate: float

    #: Quartiles (25%, 50%, 75%) of the all-found step over successful runs.
    all_found_quartiles: Optional[Tuple[float, float, float]]

    #: Median number of targets found by the checkpoint step over completed runs.
    median_found_by_checkpoint: Optional[float]

    #: Checkpoint step.
    checkpoint: int

    def describe(self) -> str:
        """
        Returns a human-readable report.
        """
        lines = [
            f"runs: {self.runs} (failed: {self.failed})",
            f"success rate: {self.success_rate:.3f}",
        ]
        if self.all_found_quartiles is not None:
            q1, q2, q3 = self.all_found_quartiles
            lines.append(f"all-found step: median {q2:.1f} (quartiles {q1:.1f} .. {q3:.1f})")
        if self.median_found_by_checkpoint is not None:
            lines.append(f"median targets found by step {self.checkpoint}: {self.median_found_by_checkpoint:.1f}")
        return "\n".join(lines)


def summarize(rows: Sequence[SummaryRow], checkpoint: int = 8000) -> Aggregate:
    """
    Aggregates summary rows.

    >>> rows = [
    ...     SummaryRow(1, "rbso", "ok", 2, 2, True, 900, 3, ((0, 100), (1, 800)), 10.0),
    ...     SummaryRow(2, "rbso", "ok", 1, 2, False, 1000, 3, ((1, 50),), 10.0),
    ... ]
    >>> aggregate = summarize(rows, checkpoint=500)
    >>> aggregate.success_rate, aggregate.all_found_quartiles, aggregate.median_found_by_checkpoint
    (0.5, (800.0, 800.0, 800.0), 1.0)
    """
    completed = [r for r in rows if r.ok]
    steps = [r.all_found_step for r in completed if r.all_found_step is not None]
    quartiles = None
    if steps:
        q1, q2, q3 = np.percentile(steps, [25, 50, 75])
        quartiles = (float(q1), float(q2), float(q3))
    found = [r.found_by(checkpoint) for r in completed]
    return Aggregate(
        runs=len(rows),
        failed=len(rows) - len(completed),
        success_rate=(len(steps) / len(rows)) if rows else 0.0,
        all_found_quartiles=quartiles,
        median_found_by_checkpoint=float(np.median(found)) if found else None,
        checkpoint=checkpoint,
    )


def sign_test(treatment: Sequence[float], control: Sequence[float]) -> float:
    """
    Computes the p-value of the one-sided paired sign test that ``treatment`` tends to exceed ``control``.

    Ties are dropped. Without any untied pair the p-value is ``1``.

    >>> round(sign_test([5, 6, 7, 8, 9], [1, 1, 1, 1, 1]), 5)
    0.03125
    >>> sign_test([1, 2], [1, 2])
    1.0
    """
    if len(treatment) != len(control):
        raise ExperimentError("Sign test requires paired samples")
    wins = sum(1 for a, b in zip(treatment, control) if a > b)
    losses = sum(1 for a, b in zip(treatment, control) if a < b)
    if wins + losses == 0:
        return 1.0
    return float(binomtest(wins, wins + losses, 0.5, alternative="greater").pvalue)
