from collections import Counter

import numpy as np
import pytest

from pyrbso.commons.errors import ProgrammingError
from pyrbso.commons.geometry import Point
from pyrbso.env.world import EnvironmentSpec, SignalReading
from pyrbso.generation import (
    Branch,
    GenerationParams,
    PersonalBest,
    generate_positions,
    noise_envelope,
    noise_scale,
    sample_branch,
    update_pbest,
)
from pyrbso.grouping import GroupingResult

## Define the world and the swarm:
env = EnvironmentSpec.of(100.0, 100.0, [], [], attenuation_a=10.0, detect_epsilon=5.0, population_n=4)
pbests = [
    PersonalBest(Point(10.0, 10.0), 0.1),
    PersonalBest(Point(12.0, 10.0), 0.05),
    PersonalBest(Point(80.0, 60.0), 0.2),
    PersonalBest(Point(82.0, 60.0), 0.01),
]
two_groups = GroupingResult(groups=((0, 1), (2, 3)), centers=(0, 2))

## Define a near-noiseless configuration:
quiet = 1e-12


def test_params() -> None:
    with pytest.raises(ProgrammingError):
        GenerationParams(p_one=1.5, p_center=0.8, noise_base=50.0, global_budget=100)
    with pytest.raises(ProgrammingError):
        GenerationParams(p_one=0.4, p_center=-0.1, noise_base=50.0, global_budget=100)
    with pytest.raises(ProgrammingError):
        GenerationParams(p_one=0.4, p_center=0.8, noise_base=0.0, global_budget=100)
    with pytest.raises(ProgrammingError):
        GenerationParams(p_one=0.4, p_center=0.8, noise_base=50.0, global_budget=0)


def test_noise_schedule() -> None:
    params = GenerationParams(0.4, 0.8, 50.0, 20000)

    ## Half the base at half the budget, decaying monotonically:
    assert noise_envelope(10000, params) == pytest.approx(25.0)
    values = [noise_envelope(t, params) for t in range(0, 20001, 500)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[0] < 50.0

    ## Scales are uniform fractions of the envelope:
    rng = np.random.default_rng(3)
    scales = [noise_scale(5000, params, rng) for _ in range(1000)]
    assert all(0.0 <= s <= noise_envelope(5000, params) for s in scales)
    assert np.mean(scales) == pytest.approx(noise_envelope(5000, params) / 2.0, rel=0.1)


def test_branch_frequencies() -> None:
    rng = np.random.default_rng(12345)
    draws = 100_000
    counts = Counter(sample_branch(0.4, 0.8, rng) for _ in range(draws))
    one = sum(n for b, n in counts.items() if b.is_one) / draws
    center = sum(n for b, n in counts.items() if b.is_center) / draws
    assert abs(one - 0.4) <= 0.01
    assert abs(center - 0.8) <= 0.01

    ## Degenerate probabilities pin the branch:
    assert {sample_branch(1.0, 1.0, rng) for _ in range(100)} == {Branch.ONE_CENTER}
    assert {sample_branch(0.0, 0.0, rng) for _ in range(100)} == {Branch.TWO_MEMBERS}


def test_two_centers_stay_on_segment() -> None:
    params = GenerationParams(p_one=0.0, p_center=1.0, noise_base=quiet, global_budget=20000)
    a, b = pbests[0].position, pbests[2].position
    for p in generate_positions(two_groups, pbests, params, 0, env, np.random.default_rng(5)):
        cross = (p.x - a.x) * (b.y - a.y) - (p.y - a.y) * (b.x - a.x)
        assert cross == pytest.approx(0.0, abs=1e-6)
        assert a.x - 1e-6 <= p.x <= b.x + 1e-6


def test_one_center_degenerate_group() -> None:
    params = GenerationParams(p_one=1.0, p_center=1.0, noise_base=quiet, global_budget=20000)
    single = GroupingResult(groups=((0, 1, 2, 3),), centers=(2,))
    for p in generate_positions(single, pbests, params, 0, env, np.random.default_rng(5)):
        assert p == pytest.approx(pbests[2].position, abs=1e-6)


def test_two_group_branches_fall_back_with_one_group() -> None:
    params = GenerationParams(p_one=0.0, p_center=0.0, noise_base=quiet, global_budget=20000)
    single = GroupingResult(groups=((0, 1, 2, 3),), centers=(2,))
    members = {pbests[i].position for i in (0, 1, 3)}
    for p in generate_positions(single, pbests, params, 0, env, np.random.default_rng(5)):
        assert any(p == pytest.approx(m, abs=1e-6) for m in members)


def test_candidates_are_clamped() -> None:
    params = GenerationParams(p_one=0.4, p_center=0.8, noise_base=1e6, global_budget=20000)
    candidates = generate_positions(two_groups, pbests, params, 0, env, np.random.default_rng(9))
    assert len(candidates) == len(pbests)
    assert all(env.in_bounds(p) for p in candidates)


def test_late_candidates_are_close_to_bases() -> None:
    params = GenerationParams(p_one=1.0, p_center=1.0, noise_base=50.0, global_budget=20000)
    centers = {pbests[0].position, pbests[2].position}
    for p in generate_positions(two_groups, pbests, params, 20000, env, np.random.default_rng(1)):
        assert min(abs(p.x - c.x) + abs(p.y - c.y) for c in centers) < 0.1


def test_generation_is_deterministic() -> None:
    params = GenerationParams(0.4, 0.8, 50.0, 20000)
    first = generate_positions(two_groups, pbests, params, 100, env, np.random.default_rng(77))
    again = generate_positions(two_groups, pbests, params, 100, env, np.random.default_rng(77))
    assert first == again


def test_update_pbest() -> None:
    incumbent = PersonalBest(Point(0.0, 0.0), 0.05)

    ## Ties and worse readings keep the incumbent:
    assert update_pbest(incumbent, Point(1.0, 1.0), SignalReading(0.05, 0, 10.0)) is incumbent
    assert update_pbest(incumbent, Point(1.0, 1.0), SignalReading(0.01, 0, 20.0)) is incumbent

    ## Strict improvements replace it:
    assert update_pbest(incumbent, Point(1.0, 1.0), SignalReading(0.06, 0, 5.0)) == PersonalBest(Point(1.0, 1.0), 0.06)
