"""
This module provides the new position generation operation: one candidate goal per robot, derived from the grouping
result the way Brain Storm Optimization derives new individuals from clusters, and the personal-best selection step.

Every candidate goal is drawn independently:

#. with probability ``p_one`` a single group is used, otherwise two distinct groups;
#. with probability ``p_center`` the group center(s) are used, otherwise randomly chosen member(s);
#. two bases are blended by a uniform convex combination;
#. the base is perturbed by Gaussian noise whose scale decays with the global step, then clamped into the arena.
"""

__all__ = [
    "Branch",
    "GenerationParams",
    "PersonalBest",
    "generate_positions",
    "noise_envelope",
    "noise_scale",
    "sample_branch",
    "update_pbest",
]

from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Sequence

import numpy as np

from .commons.errors import ProgrammingError
from .commons.geometry import Point, interpolate
from .commons.numbers import is_probability, logsig
from .env.world import EnvironmentSpec, SignalReading
from .grouping import GroupingResult


class Branch(Enum):
    """
    Provides an enumeration of the generation branches.
    """

    #: One group, its center.
    ONE_CENTER = "one-center"

    #: One group, a random member.
    ONE_MEMBER = "one-member"

    #: Two groups, their centers.
    TWO_CENTERS = "two-centers"

    #: Two groups, a random member of each.
    TWO_MEMBERS = "two-members"

    @property
    def is_one(self) -> bool:
        return self in (Branch.ONE_CENTER, Branch.ONE_MEMBER)

    @property
    def is_center(self) -> bool:
        return self in (Branch.ONE_CENTER, Branch.TWO_CENTERS)


@dataclass(frozen=True)
class GenerationParams:
    """
    Defines the parameters of the new position generation.
    """

    #: Probability of generating from one group.
    p_one: float

    #: Probability of generating from group center(s).
    p_center: float

    #: Base standard deviation of the perturbation.
    noise_base: float

    #: Global step budget ``T_g`` the noise schedule decays over.
    global_budget: int

    def __post_init__(self) -> None:
        ProgrammingError.passert(is_probability(self.p_one), "p_one must be a probability")
        ProgrammingError.passert(is_probability(self.p_center), "p_center must be a probability")
        ProgrammingError.passert(self.noise_base > 0, "Noise base must be strictly positive")
        ProgrammingError.passert(self.global_budget >= 1, "Global budget must be at least 1")


class PersonalBest(NamedTuple):
    """
    Defines a robot's personal best: the strongest signal it has visited and where.
    """

    #: Position of the personal best.
    position: Point

    #: Signal strength measured at the position when it was recorded.
    fitness: float


def noise_envelope(t: int, params: GenerationParams) -> float:
    """
    Computes the largest perturbation scale at global step ``t``: ``noise_base * logsig((T / 2 - t) / k)`` with
    ``k = T / 20``.

    >>> params = GenerationParams(0.4, 0.8, 50.0, 20000)
    >>> noise_envelope(10000, params)
    25.0
    >>> round(noise_envelope(0, params), 3)
    49.998
    >>> noise_envelope(20000, params) < 0.0023
    True
    """
    k = params.global_budget / 20.0
    return params.noise_base * logsig((0.5 * params.global_budget - t) / k)


def noise_scale(t: int, params: GenerationParams, rng: np.random.Generator) -> float:
    """
    Computes the perturbation scale at global step ``t``: the envelope times a fresh ``U(0, 1)`` draw.
    """
    return noise_envelope(t, params) * float(rng.random())


def sample_branch(p_one: float, p_center: float, rng: np.random.Generator) -> Branch:
    """
    Draws the generation branch of one candidate.

    The stream consumption is fixed: two uniform draws per call.
    """
    one = rng.random() < p_one
    center = rng.random() < p_center
    if one:
        return Branch.ONE_CENTER if center else Branch.ONE_MEMBER
    return Branch.TWO_CENTERS if center else Branch.TWO_MEMBERS


def _member(members: Sequence[int], center: int, rng: np.random.Generator) -> int:
    """
    Draws a uniformly chosen non-center member (the center itself for singleton groups).
    """
    others = [m for m in members if m != center]
    if not others:
        return center
    return others[int(rng.integers(len(others)))]


def generate_positions(
    grouping: GroupingResult,
    pbests: Sequence[PersonalBest],
    params: GenerationParams,
    t: int,
    env: EnvironmentSpec,
    rng: np.random.Generator,
) -> List[Point]:
    """
    Generates one new candidate position per robot slot.

    :param grouping: Grouping of the swarm.
    :param pbests: Personal bests of all robots.
    :param params: Generation parameters.
    :param t: Current global step (drives the noise schedule).
    :param env: Environment whose bounds the candidates are clamped into.
    :param rng: Random stream.
    :return: List of ``len(pbests)`` candidate positions.
    """
    ngroups = len(grouping.groups)
    positions: List[Point] = []
    for _ in range(len(pbests)):
        ## Decide the branch; two-group branches need two groups:
        branch = sample_branch(params.p_one, params.p_center, rng)
        if not branch.is_one and ngroups < 2:
            branch = Branch.ONE_CENTER if branch.is_center else Branch.ONE_MEMBER

        ## Compile the base position:
        if branch.is_one:
            g = int(rng.integers(ngroups))
            center = grouping.centers[g]
            robot = center if branch.is_center else _member(grouping.groups[g], center, rng)
            base = pbests[robot].position
        else:
            g1, g2 = (int(x) for x in rng.choice(ngroups, size=2, replace=False))
            if branch.is_center:
                r1, r2 = grouping.centers[g1], grouping.centers[g2]
            else:
                r1 = int(rng.choice(grouping.groups[g1]))
                r2 = int(rng.choice(grouping.groups[g2]))
            base = interpolate(pbests[r1].position, pbests[r2].position, float(rng.random()))

        ## Perturb and clamp:
        scale = noise_scale(t, params, rng)
        dx, dy = rng.normal(0.0, 1.0, size=2)
        positions.append(env.clamp(Point(base[0] + scale * float(dx), base[1] + scale * float(dy))))

    ## Done, return candidates:
    return positions


def update_pbest(pbest: PersonalBest, visited: Point, reading: SignalReading) -> PersonalBest:
    """
    Keeps the better of the incumbent personal best and the visited position (ties keep the incumbent).

    >>> incumbent = PersonalBest(Point(0.0, 0.0), 0.05)
    >>> update_pbest(incumbent, Point(1.0, 1.0), SignalReading(0.05, 0, 10.0)) is incumbent
    True
    >>> update_pbest(incumbent, Point(1.0, 1.0), SignalReading(0.06, 0, 5.0))
    PersonalBest(position=Point(x=1.0, y=1.0), fitness=0.06)
    """
    if reading.value > pbest.fitness:
        return PersonalBest(visited, reading.value)
    return pbest
