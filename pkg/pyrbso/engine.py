"""
This module provides the simulation engine: the robotic Brain Storm Optimization loop and the random-walk baseline.

One *iteration* of the loop groups the robots' personal bests, generates one new goal per robot from the groups,
assigns goals to robots optimally and runs one evaluation phase. The loop stops as soon as every target is handled or
the global budget of motion ticks is exhausted.

Global steps are motion ticks. The engine counts them from ``0`` before the first tick, so the first tick is step
``1`` and :py:attr:`RunResult.total_steps` is the number of ticks simulated.

>>> env = EnvironmentSpec.of(200.0, 200.0, [], [], attenuation_a=10.0, detect_epsilon=5.0, population_n=4)
>>> result = run(env, SimParams.of(population_n=4, seed=1))
>>> result.all_found, result.total_steps, result.targets_found
(True, 0, [])
"""

__all__ = [
    "IterationStats",
    "RunResult",
    "SimParams",
    "initialize",
    "random_free_point",
    "refresh_personal_bests",
    "run",
    "run_random_walk_baseline",
]

import logging
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .assignment import build_cost_matrix, solve_assignment
from .commons.errors import PackingError, ProgrammingError
from .commons.geometry import Point
from .env.world import EnvironmentSpec, TargetState, field_value
from .generation import GenerationParams, PersonalBest, generate_positions
from .grouping import GroupingParams, group
from .motion import FoundEvent, MotionParams, move_and_evaluate
from .robots import RobotState
from .trace import TraceSink

#: Defines the module logger.
logger = logging.getLogger(__name__)

#: Defines the number of rejection sampling attempts granted per placed item.
ATTEMPTS_PER_ITEM = 1000

#: Stream salt of robot placement.
_ROBOTS_SALT = 1

#: Stream salt of the search loop.
_SEARCH_SALT = 2


@dataclass(frozen=True)
class SimParams:
    """
    Defines the parameters of a simulation run.
    """

    #: Grouping parameters.
    grouping: GroupingParams

    #: Generation parameters.
    generation: GenerationParams

    #: Motion parameters.
    motion: MotionParams

    #: Global budget ``T_g`` in motion ticks.
    global_budget: int

    #: Seed of the search loop.
    seed: int = 0

    #: Seed of the initial robot placement (derived from :py:attr:`seed` if omitted).
    robots_seed: Optional[int] = None

    #: Indicates if personal-best fitness values are re-read against active targets at every grouping.
    refresh_pbest: bool = True

    def __post_init__(self) -> None:
        ProgrammingError.passert(self.global_budget >= 1, "Global budget must be at least 1")

    def robots_stream(self) -> np.random.Generator:
        """
        Returns a fresh random stream for the initial robot placement.
        """
        if self.robots_seed is not None:
            return np.random.default_rng(self.robots_seed)
        return np.random.default_rng([self.seed, _ROBOTS_SALT])

    def search_stream(self) -> np.random.Generator:
        """
        Returns a fresh random stream for the search loop.
        """
        return np.random.default_rng([self.seed, _SEARCH_SALT])

    @classmethod
    def of(
        cls,
        population_n: int,
        seed: int = 0,
        p_one: float = 0.4,
        p_center: float = 0.8,
        noise_base: float = 50.0,
        max_groups: Optional[int] = None,
        global_budget: int = 20000,
        mean_distance_threshold: float = 250.0,
        max_steps: int = 500,
        step_length: float = 2.0,
        d_safe: float = 3.0,
        sample_dt: float = 0.1,
        patience: int = 25,
        refresh_pbest: bool = True,
        robots_seed: Optional[int] = None,
    ) -> "SimParams":
        """
        Creates simulation parameters from flat values, using the default configuration for omitted ones.

        >>> params = SimParams.of(population_n=20)
        >>> params.grouping.max_groups, params.grouping.max_iterations, params.generation.global_budget
        (5, 20, 20000)
        """
        return cls(
            grouping=GroupingParams(
                max_groups=max_groups if max_groups is not None else max(2, population_n // 4),
                max_iterations=max(1, population_n),
                mean_distance_threshold=mean_distance_threshold,
            ),
            generation=GenerationParams(p_one, p_center, noise_base, global_budget),
            motion=MotionParams(step_length, d_safe, max_steps, sample_dt, patience),
            global_budget=global_budget,
            seed=seed,
            robots_seed=robots_seed,
            refresh_pbest=refresh_pbest,
        )


class IterationStats(NamedTuple):
    """
    Defines the statistics of one loop iteration.
    """

    #: Iteration number (``1`` based).
    iteration: int

    #: Global step before the first tick of the phase.
    start_step: int

    #: Number of ticks the phase took.
    ticks: int

    #: Number of groups formed.
    groups: int

    #: Number of targets found so far.
    found: int


@dataclass(frozen=True)
class RunResult:
    """
    Defines the result of a simulation run.
    """

    #: Found events in order of detection.
    events: Tuple[FoundEvent, ...]

    #: Number of targets in the environment.
    targets_total: int

    #: Number of ticks simulated.
    total_steps: int

    #: Path length travelled by each robot.
    path_lengths: Tuple[float, ...]

    #: Per-iteration statistics.
    iterations: Tuple[IterationStats, ...]

    @property
    def targets_found(self) -> List[Tuple[int, int]]:
        """
        Found targets as ``(target index, global step)`` tuples in order of detection.
        """
        return [(e.target, e.step) for e in self.events]

    @property
    def all_found(self) -> bool:
        return len(self.events) == self.targets_total

    @property
    def total_path_length(self) -> float:
        return float(sum(self.path_lengths))

    @property
    def all_found_step(self) -> Optional[int]:
        """
        Step at which the last target was found, ``None`` if some target was never found.
        """
        if not self.all_found:
            return None
        return self.events[-1].step if self.events else 0

    def found_by(self, step: int) -> int:
        """
        Returns the number of targets found at or before the given step.
        """
        return sum(1 for e in self.events if e.step <= step)


def random_free_point(env: EnvironmentSpec, margin: float, rng: np.random.Generator, what: str = "points") -> Point:
    """
    Draws a uniform point of the arena outside all obstacles grown by ``margin``.

    :raises PackingError: If no such point is found within the attempt budget.
    """
    for _ in range(ATTEMPTS_PER_ITEM):
        x, y = rng.uniform((0.0, 0.0), (env.width, env.height))
        point = Point(float(x), float(y))
        if env.in_free_space(point, margin):
            return point
    raise PackingError(what, 1, ATTEMPTS_PER_ITEM)


def initialize(env: EnvironmentSpec, params: SimParams) -> List[RobotState]:
    """
    Places ``N`` robots uniformly in free space, pairwise at least ``d_safe`` apart.

    Personal bests start at the initial positions with the fitness read there.

    :param env: Environment.
    :param params: Simulation parameters (seeds and safety distances).
    :return: Initial robot states.
    :raises PackingError: If the free space can not host the robots.
    """
    rng = params.robots_stream()
    clearance = params.motion.clearance
    targets = env.make_targets()

    ## Rejection-sample positions:
    positions: List[Point] = []
    attempts = 0
    budget = ATTEMPTS_PER_ITEM * env.population_n
    while len(positions) < env.population_n:
        attempts += 1
        if attempts > budget:
            raise PackingError("robots", env.population_n, budget)
        x, y = rng.uniform((0.0, 0.0), (env.width, env.height))
        candidate = Point(float(x), float(y))
        if not env.in_free_space(candidate, clearance):
            continue
        if positions and float(np.min(np.hypot(*(np.asarray(positions) - candidate).T))) < params.motion.d_safe:
            continue
        positions.append(candidate)

    ## Done, build robots:
    return [RobotState(p, PersonalBest(p, field_value(p, targets, env.attenuation_a).value)) for p in positions]


#: Defines the type of goal generators: ``(swarm, step, rng) -> goals``.
GoalGenerator = Callable[[Sequence[RobotState], int, np.random.Generator], Tuple[List[Point], int]]


def refresh_personal_bests(
    swarm: Sequence[RobotState], targets: Sequence[TargetState], env: EnvironmentSpec
) -> List[RobotState]:
    """
    Re-reads personal-best fitness values against the currently active targets, so that handled targets stop
    attracting the swarm. Positions are kept.
    """
    return [
        r.with_pbest(PersonalBest(r.pbest.position, field_value(r.pbest.position, targets, env.attenuation_a).value))
        for r in swarm
    ]


def _loop(env: EnvironmentSpec, params: SimParams, generator: GoalGenerator, sink: Optional[TraceSink]) -> RunResult:
    """
    Runs the search loop with the given goal generator.
    """
    ## Initialize the world and the swarm:
    swarm = initialize(env, params)
    targets = env.make_targets()
    rng = params.search_stream()

    ## Iterate until all targets are handled or the budget is exhausted:
    step = 0
    events: List[FoundEvent] = []
    stats: List[IterationStats] = []
    while any(t.active for t in targets) and step < params.global_budget:
        ## Generate goals:
        if params.refresh_pbest:
            swarm = refresh_personal_bests(swarm, targets, env)
        goals, ngroups = generator(swarm, step, rng)

        ## Allocate goals to robots:
        assignment = solve_assignment(build_cost_matrix([r.position for r in swarm], goals))
        assigned = [goals[j] for j in assignment.mapping]

        ## Move and evaluate:
        remaining = params.global_budget - step
        outcome = move_and_evaluate(swarm, assigned, env, targets, params.motion, step, remaining, sink)
        for event in outcome.events:
            logger.info("Target %d found by robot %d at step %d", event.target, event.robot, event.step)
        swarm, step = outcome.swarm, step + outcome.ticks
        events.extend(outcome.events)
        stats.append(IterationStats(len(stats) + 1, step - outcome.ticks, outcome.ticks, ngroups, len(events)))
        logger.debug("Iteration %d: start=%d ticks=%d groups=%d found=%d", *stats[-1])

    ## Check conservation and return:
    ProgrammingError.passert(
        len(events) + sum(1 for t in targets if t.active) == len(targets), "Targets must be conserved"
    )
    return RunResult(tuple(events), len(targets), step, tuple(r.path_length for r in swarm), tuple(stats))


def run(env: EnvironmentSpec, params: SimParams, sink: Optional[TraceSink] = None) -> RunResult:
    """
    Runs the robotic Brain Storm Optimization search.

    :param env: Environment.
    :param params: Simulation parameters.
    :param sink: Optional trace sink receiving one record per robot per tick.
    :return: Run result.
    :raises PackingError: If the robots can not be placed.
    """

    def generator(swarm: Sequence[RobotState], step: int, rng: np.random.Generator) -> Tuple[List[Point], int]:
        pbests = [r.pbest for r in swarm]
        grouping = group([p.position for p in pbests], [p.fitness for p in pbests], params.grouping, rng)
        goals = generate_positions(grouping, pbests, params.generation, step, env, rng)
        return goals, len(grouping.groups)

    return _loop(env, params, generator, sink)


def run_random_walk_baseline(env: EnvironmentSpec, params: SimParams, sink: Optional[TraceSink] = None) -> RunResult:
    """
    Runs the random-walk baseline: goals are uniform free points, everything else is as in :py:func:`run`.

    :param env: Environment.
    :param params: Simulation parameters.
    :param sink: Optional trace sink receiving one record per robot per tick.
    :return: Run result.
    :raises PackingError: If the robots or the goals can not be placed.
    """

    def generator(swarm: Sequence[RobotState], step: int, rng: np.random.Generator) -> Tuple[List[Point], int]:
        return [random_free_point(env, params.motion.clearance, rng, "goals") for _ in swarm], 0

    return _loop(env, params, generator, sink)
