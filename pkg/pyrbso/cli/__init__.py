"""
This package provides the command-line interface of :py:mod:`pyrbso`:

- ``pyrbso run SCENARIO`` runs single or batch seeded experiments and writes summaries and traces,
- ``pyrbso emit-scenario [PATH]`` writes the built-in reference scenario, and
- ``pyrbso check DIR`` cross-checks a summary table against its trace files.

Exit codes are ``0`` on success, ``1`` on IO errors and ``2`` on invalid scenarios, configurations or inconsistent
outputs.
"""

__all__ = ["build_parser", "emit_paper_scenario", "main"]

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from ..commons.errors import ExperimentError, ScenarioError
from ..env.scenario import read_scenario
from .experiment import ExperimentConfig, Mode, check_outputs, parse_seeds, run_experiment, summarize
from .tracing import Verbosity


def emit_paper_scenario() -> Dict[str, Any]:
    """
    Returns the built-in scenario document: a 1000 x 1000 arena with 20 robots, 10 random targets and 6 random
    obstacles, searched with the default configuration.

    >>> document = emit_paper_scenario()
    >>> document["bso"]["p_one"], document["rbso"]["m_d"], document["rbso"]["m_g"]
    (0.4, 250, 5)
    """
    return {
        "arena": {"width": 1000, "height": 1000},
        "obstacles_random": {"count": 6, "min_side": 50, "max_side": 150, "clearance": 100},
        "targets_random": {"count": 10},
        "robots_random": {"count": 20},
        "signal": {"a": 10, "epsilon": 5},
        "bso": {"p_one": 0.4, "p_center": 0.8, "noise_base": 50},
        "rbso": {
            "m_g": 5,
            "T_g": 20000,
            "m_d": 250,
            "m_s": 500,
            "step_length": 2,
            "d_safe": 3,
            "sample_dt": 0.1,
            "refresh_pbest": True,
        },
        "seed": 0,
    }


def build_parser() -> argparse.ArgumentParser:
    """
    Builds the argument parser.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--log-level",
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default="WARNING",
        help="logging level (default: WARNING)",
    )
    parser = argparse.ArgumentParser(prog="pyrbso", description="Robotic Brain Storm Optimization swarm simulator")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="run seeded experiments over a scenario")
    run.add_argument("scenario", help="path to the scenario file")
    seeds = run.add_mutually_exclusive_group()
    seeds.add_argument("--seed", type=int, help="single seed (default: the scenario's seed)")
    seeds.add_argument("--seeds", help="seed range A..B or comma separated seed list")
    run.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.RBSO.value, help="search mode")
    run.add_argument("--out", help="output directory")
    run.add_argument(
        "--trace", choices=[v.value for v in Verbosity], default=Verbosity.NONE.value, help="trace verbosity"
    )
    run.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE", help="override a scenario field"
    )
    run.add_argument("--jobs", type=int, default=1, help="number of worker processes")
    run.add_argument("--checkpoint", type=int, default=8000, help="step at which found targets are reported")

    emit = commands.add_parser("emit-scenario", parents=[common], help="write the built-in reference scenario")
    emit.add_argument("path", nargs="?", help="output file (default: standard output)")

    check = commands.add_parser("check", parents=[common], help="cross-check a summary table against trace files")
    check.add_argument("directory", help="output directory of a previous run")

    return parser


def _run(args: argparse.Namespace) -> int:
    ## Resolve seeds and check the scenario once before fanning out:
    if args.seeds is not None:
        seeds: Sequence[int] = parse_seeds(args.seeds)
    elif args.seed is not None:
        seeds = [args.seed]
    else:
        seeds = [read_scenario(args.scenario, args.overrides).params.seed]
    config = ExperimentConfig.of(
        args.scenario, seeds, args.mode, args.out, args.trace, args.overrides, args.jobs, args.checkpoint
    )
    read_scenario(config.scenario, [*config.overrides, f"seed={config.seeds[0]}"])

    ## Run and report:
    rows = run_experiment(config)
    print(summarize(rows, config.checkpoint).describe())
    return 0


def _emit(args: argparse.Namespace) -> int:
    text = json.dumps(emit_paper_scenario(), indent=2) + "\n"
    if args.path is None:
        sys.stdout.write(text)
    else:
        Path(args.path).write_text(text, encoding="utf-8")
    return 0


def _check(args: argparse.Namespace) -> int:
    problems = check_outputs(Path(args.directory))
    for problem in problems:
        print(problem, file=sys.stderr)
    if problems:
        return 2
    print("consistent")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """
    Runs the command-line interface.

    :param argv: Command-line arguments (defaults to ``sys.argv[1:]``).
    :return: Exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    handlers = {"run": _run, "emit-scenario": _emit, "check": _check}
    try:
        return handlers[args.command](args)
    except (ScenarioError, ExperimentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 1
