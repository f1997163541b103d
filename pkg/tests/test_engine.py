import itertools
import math
import statistics
from collections import defaultdict
from dataclasses import replace
from typing import Dict, List, Sequence

import pytest

from pyrbso.cli import emit_paper_scenario
from pyrbso.cli.experiment import sign_test
from pyrbso.commons.errors import PackingError
from pyrbso.commons.geometry import Point, distance
from pyrbso.engine import (
    RunResult,
    SimParams,
    initialize,
    random_free_point,
    refresh_personal_bests,
    run,
    run_random_walk_baseline,
)
from pyrbso.env.scenario import load_scenario
from pyrbso.env.world import EnvironmentSpec, Rectangle, field_value
from pyrbso.generation import PersonalBest
from pyrbso.robots import RobotState
from pyrbso.trace import ListSink, StepTrace

## Define a small world:
env = EnvironmentSpec.of(
    200.0,
    200.0,
    [Rectangle.of(Point(80.0, 80.0), Point(120.0, 120.0))],
    [Point(30.0, 40.0), Point(170.0, 150.0), Point(60.0, 180.0)],
    attenuation_a=10.0,
    detect_epsilon=5.0,
    population_n=6,
)

## Define small parameters:
params = SimParams.of(population_n=6, seed=3, global_budget=3000, max_steps=200)


def _check_result(result: RunResult, world: EnvironmentSpec, budget: int) -> None:
    ## Steps are bounded and found steps never decrease:
    assert 0 <= result.total_steps <= budget
    steps = [s for _, s in result.targets_found]
    assert steps == sorted(steps)
    assert all(1 <= s <= result.total_steps for s in steps)

    ## Every target is found at most once, close to the robot which found it:
    found = [t for t, _ in result.targets_found]
    assert len(found) == len(set(found))
    assert len(found) <= result.targets_total == len(world.targets)
    for event in result.events:
        assert distance(event.position, world.targets[event.target]) < world.detect_epsilon

    ## Iterations tile the run:
    assert sum(i.ticks for i in result.iterations) == result.total_steps
    for previous, current in zip(result.iterations, result.iterations[1:]):
        assert current.start_step == previous.start_step + previous.ticks
    assert all(0.0 <= length for length in result.path_lengths)


def _check_safety(records: Sequence[StepTrace], world: EnvironmentSpec, config: SimParams) -> None:
    positions: Dict[int, List[Point]] = defaultdict(list)
    for record in records:
        positions[record.step].append(Point(record.x, record.y))

    ## Every tick has every robot, in bounds, clear of obstacles and apart from each other:
    assert sorted(positions) == list(range(1, len(positions) + 1))
    for snapshot in positions.values():
        assert len(snapshot) == world.population_n
        for p in snapshot:
            assert world.in_free_space(p, config.motion.clearance - 1e-6)
        for p, q in itertools.combinations(snapshot, 2):
            assert distance(p, q) >= config.motion.d_safe - 1e-9


def test_no_targets() -> None:
    empty = EnvironmentSpec.of(100.0, 100.0, [], [], 10.0, 5.0, population_n=3)
    result = run(empty, SimParams.of(population_n=3))
    assert result.all_found
    assert result.total_steps == 0
    assert result.all_found_step == 0
    assert result.iterations == ()


def test_target_within_reach() -> None:
    world = EnvironmentSpec.of(100.0, 100.0, [], [Point(50.0, 50.0)], 10.0, 200.0, population_n=1)
    result = run(world, SimParams.of(population_n=1, seed=5))
    assert result.targets_found == [(0, 1)]
    assert result.all_found_step == 1
    assert result.total_steps == 1


def test_run() -> None:
    result = run(env, params)
    _check_result(result, env, 3000)
    assert result.found_by(result.total_steps) == len(result.events)
    assert result.all_found == (len(result.events) == 3)


def test_run_is_deterministic() -> None:
    first, again = ListSink(), ListSink()
    assert run(env, params, first) == run(env, params, again)
    assert first.records == again.records
    assert len(first.records) == run(env, params).total_steps * env.population_n


def test_seeds_matter() -> None:
    assert initialize(env, params) != initialize(env, replace(params, seed=4))
    pinned = replace(params, robots_seed=9)
    assert initialize(env, pinned) == initialize(env, replace(pinned, seed=4))


def test_initialize() -> None:
    swarm = initialize(env, params)
    assert len(swarm) == env.population_n
    for robot in swarm:
        assert env.in_free_space(robot.position, params.motion.clearance)
        assert robot.pbest.position == robot.position
    for a, b in itertools.combinations(swarm, 2):
        assert distance(a.position, b.position) >= params.motion.d_safe


def test_packing_errors() -> None:
    covered = EnvironmentSpec.of(10.0, 10.0, [Rectangle.of(Point(1.0, 1.0), Point(9.0, 9.0))], [], 10.0, 5.0, 2)
    with pytest.raises(PackingError) as excinfo:
        initialize(covered, SimParams.of(population_n=2))
    assert excinfo.value.what == "robots"

    with pytest.raises(PackingError):
        random_free_point(covered, 1.5, SimParams.of(population_n=2).search_stream())


def test_budget_truncates_the_run() -> None:
    full = run(env, params)
    for budget in (1, 150, 700):
        truncated = run(env, replace(params, global_budget=budget))
        _check_result(truncated, env, budget)
        assert truncated.total_steps == min(budget, full.total_steps)
        assert truncated.targets_found == [(t, s) for t, s in full.targets_found if s <= budget]


def test_random_walk_baseline() -> None:
    result = run_random_walk_baseline(env, params)
    _check_result(result, env, 3000)
    assert run_random_walk_baseline(env, params) == result
    assert all(i.groups == 0 for i in result.iterations)


def test_refreshed_personal_bests() -> None:
    assert params.refresh_pbest
    targets = env.make_targets()
    on_target = RobotState(Point(31.0, 40.0), PersonalBest(Point(30.0, 40.0), 1.0))
    elsewhere = RobotState(Point(165.0, 150.0), PersonalBest(Point(168.0, 150.0), 0.5))

    ## Fitness follows the active targets, positions stay:
    fresh, _ = refresh_personal_bests([on_target, elsewhere], targets, env)
    assert fresh.pbest.position == Point(30.0, 40.0)
    assert fresh.pbest.fitness == field_value(Point(30.0, 40.0), targets, env.attenuation_a).value

    ## Handled targets stop attracting:
    targets[0].deactivate()
    stale, kept = refresh_personal_bests([on_target, elsewhere], targets, env)
    assert stale.pbest.fitness < kept.pbest.fitness
    assert stale.pbest.fitness == field_value(Point(30.0, 40.0), targets, env.attenuation_a).value


def test_frozen_personal_bests() -> None:
    result = run(env, replace(params, refresh_pbest=False))
    _check_result(result, env, 3000)
    assert run(env, replace(params, refresh_pbest=False)) == result


def test_safety() -> None:
    sink = ListSink()
    run(env, params, sink)
    _check_safety(sink.records, env, params)


@pytest.mark.slow
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_default_scenario(seed: int) -> None:
    world, config = load_scenario(emit_paper_scenario(), [f"seed={seed}"])
    sink = ListSink()
    result = run(world, config, sink)
    _check_result(result, world, 20000)
    _check_safety(sink.records, world, config)
    assert result.targets_total == 10
    assert len(result.path_lengths) == 20


@pytest.mark.slow
def test_default_scenario_acceptance() -> None:
    searched, walked = [], []
    for seed in range(1, 31):
        world, config = load_scenario(emit_paper_scenario(), [f"seed={seed}"])
        searched.append(run(world, config))
        walked.append(run_random_walk_baseline(world, config))

    ## Most runs find every target, and fast:
    steps = [r.all_found_step if r.all_found_step is not None else math.inf for r in searched]
    assert sum(1 for r in searched if r.all_found) >= 24
    assert statistics.median(steps) <= 12000

    ## The search beats the random walk:
    by_checkpoint = [r.found_by(8000) for r in searched]
    baseline = [r.found_by(8000) for r in walked]
    assert statistics.median(by_checkpoint) > statistics.median(baseline)
    assert sign_test(by_checkpoint, baseline) < 0.05
