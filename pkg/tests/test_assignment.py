import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pyrbso.assignment import BRUTE_FORCE_LIMIT, brute_force_assignment, build_cost_matrix, solve_assignment
from pyrbso.commons.errors import AssignmentError, ProgrammingError
from pyrbso.commons.geometry import Point

## Define small integer cost matrices, full of ties:
tied_matrices = st.integers(min_value=1, max_value=6).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.integers(min_value=0, max_value=3).map(float))
)


def test_cost_matrix() -> None:
    costs = build_cost_matrix([Point(0.0, 0.0), Point(0.0, 1.0)], [Point(3.0, 4.0), Point(0.0, 1.0)])
    assert costs.shape == (2, 2)
    assert costs[0, 0] == 5.0
    assert costs[1, 1] == 0.0
    assert costs[0, 1] == 1.0
    assert build_cost_matrix([], []).shape == (0, 0)
    with pytest.raises(ProgrammingError):
        build_cost_matrix([Point(0.0, 0.0)], [])


@pytest.mark.parametrize("n", range(2, 8))
def test_against_brute_force(n: int) -> None:
    rng = np.random.default_rng(n)
    for _ in range(500):
        costs = rng.uniform(0.0, 1000.0, size=(n, n))
        solved, oracle = solve_assignment(costs), brute_force_assignment(costs)
        assert solved.mapping == oracle.mapping
        assert solved.total_cost == oracle.total_cost
        assert sorted(solved.mapping) == list(range(n))


@given(tied_matrices)
def test_ties_break_lexicographically(costs: np.ndarray) -> None:
    assert solve_assignment(costs) == brute_force_assignment(costs)


def test_invariant_under_row_shift_and_scaling() -> None:
    rng = np.random.default_rng(42)
    for _ in range(100):
        costs = rng.uniform(0.0, 100.0, size=(5, 5))
        solved = solve_assignment(costs)
        mapping = solved.mapping

        ## Adding a constant to a row adds it to every assignment:
        shifted = costs.copy()
        shifted[int(rng.integers(5))] += 10.0
        moved = solve_assignment(shifted)
        assert moved.mapping == mapping
        assert moved.total_cost == pytest.approx(solved.total_cost + 10.0)

        ## Scaling by a positive factor keeps the order of totals:
        assert solve_assignment(costs * 3.5).mapping == mapping


def test_trivial_problems() -> None:
    assert solve_assignment(np.zeros((0, 0))).mapping == ()
    assert solve_assignment(np.array([[4.0]])).mapping == (0,)
    assert solve_assignment(np.zeros((4, 4))).mapping == (0, 1, 2, 3)


def test_rejected_matrices() -> None:
    with pytest.raises(AssignmentError) as excinfo:
        solve_assignment(np.zeros((2, 3)))
    assert excinfo.value.shape == (2, 3)

    with pytest.raises(AssignmentError, match="nonnegative"):
        solve_assignment(np.array([[1.0, -1.0], [0.0, 1.0]]))
    with pytest.raises(AssignmentError, match="finite"):
        solve_assignment(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(AssignmentError, match="finite"):
        brute_force_assignment(np.array([[1.0, np.inf], [0.0, 1.0]]))

    size = BRUTE_FORCE_LIMIT + 1
    with pytest.raises(AssignmentError, match="exhaustive"):
        brute_force_assignment(np.ones((size, size)))
    assert sorted(solve_assignment(np.ones((size, size))).mapping) == list(range(size))
