"""
This module provides the task allocation of the swarm: an optimal assignment (single-task robots, single-robot tasks,
instantaneous assignment) of robots to generated goal positions that minimizes the total travel cost.

>>> costs = build_cost_matrix([Point(0.0, 0.0), Point(10.0, 0.0)], [Point(10.0, 0.0), Point(0.0, 0.0)])
>>> solve_assignment(costs)
Assignment(mapping=(1, 0), total_cost=0.0)
"""

__all__ = ["Assignment", "build_cost_matrix", "brute_force_assignment", "solve_assignment"]

import itertools
import math
from typing import NamedTuple, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .commons.errors import AssignmentError, ProgrammingError
from .commons.geometry import Point

#: Defines the type of cost matrices (rows are robots, columns are goals).
CostMatrix = NDArray[np.float64]

#: Defines the largest problem size the exhaustive oracle accepts.
BRUTE_FORCE_LIMIT = 9

#: Defines the relative tolerance under which two total costs are considered a tie.
_TIE_TOLERANCE = 1e-9


class Assignment(NamedTuple):
    """
    Defines an assignment: ``mapping[i]`` is the goal (column) of robot (row) ``i``.
    """

    #: Goal index of each robot.
    mapping: Tuple[int, ...]

    #: Sum of the costs of the assigned pairs.
    total_cost: float


def build_cost_matrix(robots: Sequence[Point], goals: Sequence[Point]) -> CostMatrix:
    """
    Builds the matrix of straight-line distances from every robot to every goal.

    >>> build_cost_matrix([Point(0.0, 0.0)], [Point(3.0, 4.0)])
    array([[5.]])
    """
    ProgrammingError.passert(len(robots) == len(goals), "Robot and goal counts must be equal")
    if not robots:
        return np.zeros((0, 0))
    return cdist(np.asarray(robots, dtype=float), np.asarray(goals, dtype=float))


def _check(costs: CostMatrix) -> CostMatrix:
    """
    Checks that the cost matrix is square, finite and nonnegative.
    """
    matrix = np.asarray(costs, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise AssignmentError(tuple(matrix.shape), "cost matrix must be square")
    if not np.all(np.isfinite(matrix)):
        raise AssignmentError(tuple(matrix.shape), "costs must be finite")
    if np.any(matrix < 0):
        raise AssignmentError(tuple(matrix.shape), "costs must be nonnegative")
    return matrix


def _total(costs: CostMatrix, mapping: Sequence[int]) -> float:
    """
    Sums the assigned costs in row order.
    """
    return math.fsum(float(costs[i, j]) for i, j in enumerate(mapping))


def _is_tie(value: float, optimum: float) -> bool:
    return value <= optimum + _TIE_TOLERANCE * max(1.0, abs(optimum))


def _optimum(costs: CostMatrix) -> float:
    rows, cols = linear_sum_assignment(costs)
    return math.fsum(float(costs[r, c]) for r, c in zip(rows, cols))


def solve_assignment(costs: CostMatrix) -> Assignment:
    """
    Solves the optimal assignment problem with the Kuhn-Munkres algorithm.

    Among optimal assignments, the lexicographically smallest mapping is returned: rows are fixed one at a time to the
    smallest column that still admits an optimal completion.

    >>> solve_assignment(np.array([[1.0, 2.0], [2.0, 1.0]]))
    Assignment(mapping=(0, 1), total_cost=2.0)
    >>> solve_assignment(np.zeros((2, 2)))
    Assignment(mapping=(0, 1), total_cost=0.0)
    >>> solve_assignment(np.zeros((2, 3)))
    Traceback (most recent call last):
    ...
    pyrbso.commons.errors.AssignmentError: Cost matrix of shape (2, 3) rejected: cost matrix must be square
    """
    matrix = _check(costs)
    n = matrix.shape[0]
    if n == 0:
        return Assignment((), 0.0)

    ## Compute the optimal value:
    optimum = _optimum(matrix)

    ## Fix rows in order to the smallest admissible column:
    mapping = []
    rows = list(range(n))
    cols = list(range(n))
    fixed = 0.0
    for row in range(n):
        rows.remove(row)
        for col in sorted(cols):
            rest = [c for c in cols if c != col]
            value = fixed + float(matrix[row, col])
            if rows:
                value += _optimum(matrix[np.ix_(rows, rest)])
            if _is_tie(value, optimum):
                mapping.append(col)
                cols.remove(col)
                fixed += float(matrix[row, col])
                break
        else:
            raise ProgrammingError("No optimal completion found while breaking ties")

    ## Check the bijection and return:
    ProgrammingError.passert(sorted(mapping) == list(range(n)), "Assignment must be a bijection")
    return Assignment(tuple(mapping), _total(matrix, mapping))


def brute_force_assignment(costs: CostMatrix) -> Assignment:
    """
    Solves the optimal assignment problem exhaustively over all permutations.

    Among optimal assignments, the lexicographically smallest mapping is returned. This is a test oracle.

    >>> brute_force_assignment(np.array([[1.0, 2.0], [2.0, 1.0]]))
    Assignment(mapping=(0, 1), total_cost=2.0)
    >>> brute_force_assignment(np.array([[7.0]]))
    Assignment(mapping=(0,), total_cost=7.0)
    """
    matrix = _check(costs)
    n = matrix.shape[0]
    if n > BRUTE_FORCE_LIMIT:
        raise AssignmentError(tuple(matrix.shape), f"exhaustive search is limited to {BRUTE_FORCE_LIMIT} rows")
    if n == 0:
        return Assignment((), 0.0)

    ## Evaluate every permutation (generated in lexicographic order):
    perms = np.array(list(itertools.permutations(range(n))), dtype=int)
    totals = matrix[np.arange(n), perms].sum(axis=1)

    ## Take the first near-optimal permutation and report its exact total:
    optimum = float(totals.min())
    best = next(p for p, v in zip(perms, totals) if _is_tie(float(v), optimum))
    mapping = tuple(int(j) for j in best)
    return Assignment(mapping, _total(matrix, mapping))
