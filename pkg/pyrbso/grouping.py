"""
This module provides the grouping operation of the swarm: a top-down divisive hierarchical clustering (DIANA) of the
robots' personal-best positions and the selection of one center robot per group.

>>> points = [(0.0, 0.0), (1.0, 0.0), (500.0, 0.0), (501.0, 0.0)]
>>> diana_split(points, GroupingParams(max_groups=4, max_iterations=10, mean_distance_threshold=250.0))
[[0, 1], [2, 3]]
"""

__all__ = [
    "GroupingParams",
    "GroupingResult",
    "diana_split",
    "group",
    "internal_mean_distance",
    "inter_group_mean_distance",
    "select_centers",
]

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import cdist, pdist, squareform

from .commons.errors import ProgrammingError

#: Defines a type alias for anything that looks like a sequence of 2-D points.
PointsLike = Sequence[Tuple[float, float]]


@dataclass(frozen=True)
class GroupingParams:
    """
    Defines the parameters of the grouping operation.
    """

    #: Maximum number of groups ``m_g``.
    max_groups: int

    #: Guard on the number of splits performed by one grouping.
    max_iterations: int

    #: Internal mean distance ``m_d`` below which a group is not split any further.
    mean_distance_threshold: float

    def __post_init__(self) -> None:
        ProgrammingError.passert(self.max_groups >= 2, "Maximum number of groups must be at least 2")
        ProgrammingError.passert(self.max_iterations >= 1, "Grouping loop guard must be at least 1")
        ProgrammingError.passert(self.mean_distance_threshold > 0, "Mean distance threshold must be positive")


@dataclass(frozen=True)
class GroupingResult:
    """
    Defines the partition of the swarm into groups along with one center robot per group.
    """

    #: Groups as lists of robot indices (ascending within each group).
    groups: Tuple[Tuple[int, ...], ...]

    #: Center robot index of each group.
    centers: Tuple[int, ...]

    def __post_init__(self) -> None:
        ProgrammingError.passert(len(self.groups) == len(self.centers), "One center per group is required")
        ProgrammingError.passert(
            all(c in g for g, c in zip(self.groups, self.centers)), "Every center must belong to its group"
        )

    def group_of(self, robot: int) -> int:
        """
        Returns the index of the group the robot belongs to.
        """
        for index, members in enumerate(self.groups):
            if robot in members:
                return index
        raise LookupError(f"Robot {robot} is not a member of any group")


def inter_group_mean_distance(a: PointsLike, b: PointsLike) -> float:
    """
    Computes the mean Euclidean distance over all pairs ``(x, y)`` with ``x`` in ``a`` and ``y`` in ``b``.

    >>> inter_group_mean_distance([(0.0, 0.0)], [(3.0, 4.0)])
    5.0
    >>> inter_group_mean_distance([(0.0, 0.0), (0.0, 2.0)], [(0.0, 0.0)])
    1.0
    """
    ProgrammingError.passert(len(a) > 0 and len(b) > 0, "Groups must not be empty")
    return float(np.mean(cdist(np.asarray(a, dtype=float), np.asarray(b, dtype=float))))


def internal_mean_distance(points: PointsLike) -> float:
    """
    Computes the mean distance of a group to itself, excluding self-pairs (``0`` for singletons).

    >>> internal_mean_distance([(0.0, 0.0), (0.0, 2.0)])
    2.0
    >>> internal_mean_distance([(7.0, 7.0)])
    0.0
    """
    if len(points) < 2:
        return 0.0
    return float(np.mean(pdist(np.asarray(points, dtype=float))))


def diana_split(
    points: PointsLike, params: GroupingParams, rng: Optional[np.random.Generator] = None
) -> List[List[int]]:
    """
    Partitions the point indices by divisive analysis.

    Starting from one all-inclusive group, the group with the maximum internal mean distance is split around its
    most dissimilar pair ``(i, j)``: every member joins whichever of ``i`` or ``j`` is closer (ties join ``i``, the
    smaller index). The first split is always performed when there are at least two points, so that two-group
    generation is possible. Further splits stop as soon as

    #. the number of groups reaches ``m_g``,
    #. every group's internal mean distance is at most ``m_d``,
    #. the group selected for splitting has at most two members, or
    #. the loop guard trips.

    The procedure is deterministic: ``rng`` is accepted for interface symmetry with the other grouping operations and
    is not consumed.

    :param points: Points to partition (personal-best positions of the robots).
    :param params: Grouping parameters.
    :param rng: Unused random stream.
    :return: Groups as ascending lists of point indices.
    """
    ProgrammingError.passert(len(points) >= 1, "Can not group an empty swarm")

    ## Compute the full distance matrix once:
    coords = np.asarray(points, dtype=float)
    dmatrix = squareform(pdist(coords)) if len(coords) > 1 else np.zeros((1, 1))

    ## Start with the whole swarm:
    groups: List[List[int]] = [list(range(len(coords)))]

    ## Split until one of the stopping conditions is met:
    splits = 0
    while len(groups) < params.max_groups and splits < params.max_iterations:
        ## Select the group with the maximum internal mean distance (first one on ties):
        internal = [_internal(dmatrix, g) for g in groups]
        selected = int(np.argmax(internal))
        members = groups[selected]

        ## Check stopping conditions (the very first split is mandatory):
        if len(members) < 2:
            break
        if splits > 0 and (internal[selected] <= params.mean_distance_threshold or len(members) <= 2):
            break

        ## Split the group around its most dissimilar pair and replace it in place:
        groups[selected : selected + 1] = list(_split(dmatrix, members))  # noqa: E203
        splits += 1

    ## Check and return the partition:
    ProgrammingError.passert(sorted(i for g in groups for i in g) == list(range(len(coords))), "Broken partition")
    return groups


def _internal(dmatrix: NDArray[np.float64], members: List[int]) -> float:
    """
    Computes the internal mean distance of a group from the full distance matrix.
    """
    n = len(members)
    if n < 2:
        return 0.0
    sub = dmatrix[np.ix_(members, members)]
    return float(sub.sum() / (n * (n - 1)))


def _split(dmatrix: NDArray[np.float64], members: List[int]) -> Tuple[List[int], List[int]]:
    """
    Splits the group around its most dissimilar pair.
    """
    ## Find the most dissimilar pair (first in row-major order, hence smallest indices on ties):
    sub = dmatrix[np.ix_(members, members)]
    flat = int(np.argmax(sub))
    a, b = divmod(flat, len(members))
    a, b = min(a, b), max(a, b)

    ## All members coincide, pick the first two as seeds:
    if a == b:
        a, b = 0, 1

    ## Assign each member to the closer seed, seeds stay on their own side:
    left = [m for k, m in enumerate(members) if k != b and (k == a or sub[k, a] <= sub[k, b])]
    right = [m for k, m in enumerate(members) if k == b or (k != a and sub[k, a] > sub[k, b])]
    return left, right


def select_centers(groups: Sequence[Sequence[int]], fitness: Sequence[float], rng: np.random.Generator) -> List[int]:
    """
    Selects the center of each group: the member with the maximum personal-best fitness.

    When several members share the maximum, or all members of the group read ``0``, the center is drawn uniformly at
    random among them.

    >>> select_centers([[0, 1, 2]], [0.3, 0.1, 0.2], np.random.default_rng(0))
    [0]
    """
    centers: List[int] = []
    for members in groups:
        values = [fitness[m] for m in members]
        best = max(values)
        tied = [m for m, v in zip(members, values) if v == best]
        if len(tied) == 1:
            centers.append(tied[0])
        else:
            centers.append(tied[int(rng.integers(len(tied)))])
    return centers


def group(
    points: PointsLike, fitness: Sequence[float], params: GroupingParams, rng: np.random.Generator
) -> GroupingResult:
    """
    Groups the swarm and selects group centers in one go.
    """
    groups = diana_split(points, params, rng)
    centers = select_centers(groups, fitness, rng)
    return GroupingResult(tuple(tuple(g) for g in groups), tuple(centers))
