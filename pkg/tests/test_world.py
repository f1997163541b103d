import math
from decimal import Decimal, localcontext
from random import Random
from typing import List

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pyrbso.commons.geometry import Point
from pyrbso.env.world import EnvironmentSpec, Rectangle, TargetState, field_value, is_blocked, per_target_signal

## Define pi to 60 digits for the high-precision signal oracle:
PI = Decimal("3.141592653589793238462643383279502884197169399375105820974944")

## Define some world elements:
box = Rectangle.of(Point(10.0, 10.0), Point(20.0, 20.0))
coords = st.floats(min_value=0.0, max_value=30.0, allow_nan=False, allow_infinity=False)
points = st.builds(Point, coords, coords)


def _oracle(d: float, a: float) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 60
        da, aa = Decimal(d), Decimal(a)
        return (-da / (aa * aa)).exp() / (aa * PI.sqrt())


def test_per_target_signal_values() -> None:
    ## Analytically forced:
    assert per_target_signal(0.0, 10.0) == pytest.approx(1.0 / (10.0 * math.sqrt(math.pi)), rel=1e-15)
    assert per_target_signal(100.0, 10.0) == pytest.approx(0.0564189583547756 * math.exp(-1.0), rel=1e-12)

    ## Decays to zero:
    assert per_target_signal(1e6, 10.0) == 0.0


def test_per_target_signal_precision() -> None:
    rng = np.random.default_rng(2024)
    for d, a in zip(rng.uniform(0.0, 2000.0, 1000), rng.uniform(5.0, 50.0, 1000)):
        expected = _oracle(float(d), float(a))
        actual = Decimal(per_target_signal(float(d), float(a)))
        if expected == 0:
            continue
        assert abs(actual - expected) / expected < Decimal("1e-12")


@given(st.floats(min_value=0.0, max_value=500.0), st.floats(min_value=1.0, max_value=100.0), st.floats(0.01, 10.0))
def test_per_target_signal_decreasing(d: float, a: float, delta: float) -> None:
    near, far = per_target_signal(d, a), per_target_signal(d + delta, a)
    assert near > 0
    assert near >= far


def test_field_value() -> None:
    ## Two active targets at distances 10 and 50:
    targets = [TargetState(Point(10.0, 0.0)), TargetState(Point(50.0, 0.0))]
    reading = field_value(Point(0.0, 0.0), targets, 10.0)
    assert reading.value == per_target_signal(10.0, 10.0)
    assert reading.nearest_active_target == 0
    assert reading.nearest_distance == 10.0

    ## At the center of a target:
    assert field_value(Point(50.0, 0.0), targets, 10.0).value == per_target_signal(0.0, 10.0)

    ## Inactive targets contribute nothing:
    targets[0].deactivate()
    reading = field_value(Point(0.0, 0.0), targets, 10.0)
    assert reading.value == per_target_signal(50.0, 10.0)
    assert reading.nearest_active_target == 1

    ## No active targets, no signal:
    targets[1].deactivate()
    reading = field_value(Point(0.0, 0.0), targets, 10.0)
    assert reading.value == 0.0
    assert reading.nearest_active_target is None
    assert reading.nearest_distance == math.inf


@given(st.lists(points, min_size=1, max_size=8), points, st.randoms(use_true_random=False))
def test_field_value_permutation_invariance(locations: List[Point], p: Point, random: Random) -> None:
    targets = [TargetState(loc) for loc in locations]
    shuffled = list(targets)
    random.shuffle(shuffled)
    assert field_value(p, targets, 10.0).value == field_value(p, shuffled, 10.0).value


@given(st.lists(points, min_size=1, max_size=8), points, st.data())
def test_deactivation_never_increases(locations: List[Point], p: Point, data: st.DataObject) -> None:
    targets = [TargetState(loc) for loc in locations]
    before = field_value(p, targets, 10.0).value
    targets[data.draw(st.integers(0, len(targets) - 1))].deactivate()
    assert field_value(p, targets, 10.0).value <= before


def test_is_blocked() -> None:
    ## Entirely left of the rectangle:
    assert not is_blocked((Point(0.0, 0.0), Point(5.0, 30.0)), [box])

    ## Crossing the center:
    assert is_blocked((Point(0.0, 15.0), Point(30.0, 15.0)), [box])
    assert is_blocked((Point(15.0, 0.0), Point(15.0, 30.0)), [box])
    assert is_blocked((Point(0.0, 30.0), Point(30.0, 0.0)), [box])

    ## Grazing along edges and touching corners:
    assert not is_blocked((Point(0.0, 10.0), Point(30.0, 10.0)), [box])
    assert not is_blocked((Point(20.0, 0.0), Point(20.0, 30.0)), [box])
    assert not is_blocked((Point(10.0, 30.0), Point(30.0, 10.0)), [box])

    ## Ending on the boundary, starting on the boundary and pointing away:
    assert not is_blocked((Point(0.0, 15.0), Point(10.0, 15.0)), [box])
    assert not is_blocked((Point(20.0, 15.0), Point(30.0, 15.0)), [box])

    ## Entirely inside:
    assert is_blocked((Point(12.0, 12.0), Point(13.0, 13.0)), [box])


@settings(max_examples=300)
@given(points, points)
def test_is_blocked_against_sampling(p: Point, q: Point) -> None:
    ## Symmetric in endpoint order:
    assert is_blocked((p, q), [box]) == is_blocked((q, p), [box])

    ## Points sampled strictly inside the interior imply blocking:
    samples = [Point(p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t) for t in np.linspace(0.0, 1.0, 2001)]
    if any(box.contains(s, margin=-1e-6) for s in samples):
        assert is_blocked((p, q), [box])

    ## No blocking implies no interior sample:
    if not is_blocked((p, q), [box]):
        assert not any(box.contains(s, margin=-1e-6) for s in samples)


def test_environment_spec() -> None:
    env = EnvironmentSpec.of(100.0, 50.0, [box], [Point(5.0, 5.0)], attenuation_a=10.0, detect_epsilon=5.0)
    assert env.in_bounds(Point(100.0, 50.0))
    assert not env.in_bounds(Point(100.1, 50.0))
    assert not env.in_free_space(Point(15.0, 15.0))
    assert env.in_free_space(Point(9.0, 15.0))
    assert not env.in_free_space(Point(9.0, 15.0), margin=1.5)
    assert env.clamp(Point(120.0, -3.0)) == Point(100.0, 0.0)
    assert env.detection_threshold == per_target_signal(5.0, 10.0)
    assert [t.active for t in env.make_targets()] == [True]


def test_environment_spec_errors() -> None:
    with pytest.raises(ValueError, match="arena.width"):
        EnvironmentSpec.of(0.0, 50.0, [], [], 10.0, 5.0)
    with pytest.raises(ValueError, match="signal.a"):
        EnvironmentSpec.of(100.0, 50.0, [], [], -1.0, 5.0)
    with pytest.raises(ValueError, match="signal.epsilon"):
        EnvironmentSpec.of(100.0, 50.0, [], [], 10.0, 0.0)
    with pytest.raises(ValueError, match="robots_random.count"):
        EnvironmentSpec.of(100.0, 50.0, [], [], 10.0, 5.0, population_n=0)
    with pytest.raises(ValueError, match=r"obstacles\[0\]"):
        EnvironmentSpec.of(15.0, 50.0, [box], [], 10.0, 5.0)
    with pytest.raises(ValueError, match=r"targets\[0\]"):
        EnvironmentSpec.of(100.0, 50.0, [box], [Point(15.0, 15.0)], 10.0, 5.0)
    with pytest.raises(ValueError, match=r"targets\[0\]"):
        EnvironmentSpec.of(100.0, 50.0, [box], [Point(10.0, 15.0)], 10.0, 5.0)
    with pytest.raises(ValueError, match=r"targets\[0\]"):
        EnvironmentSpec.of(100.0, 50.0, [], [Point(150.0, 15.0)], 10.0, 5.0)
