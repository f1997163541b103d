"""
This module provides the world model of the simulation: the arena, rectangular obstacles, beacon targets and the
signal field the swarm measures.

A target at distance ``d`` contributes the signal strength

.. math:: s = \\frac{1}{a\\sqrt{\\pi}} e^{-d / a^2}

where ``a`` is the attenuation coefficient. Several active targets combine by taking the *maximum* contribution, so
that every target keeps its own fitness peak and no spurious peak appears between two targets.

>>> env = EnvironmentSpec.of(100.0, 100.0, [], [Point(50.0, 50.0)], attenuation_a=10.0, detect_epsilon=5.0)
>>> targets = env.make_targets()
>>> reading = field_value(Point(50.0, 50.0), targets, env.attenuation_a)
>>> round(reading.value, 7), reading.nearest_active_target, reading.nearest_distance
(0.056419, 0, 0.0)
>>> targets[0].deactivate()
>>> field_value(Point(50.0, 50.0), targets, env.attenuation_a)
SignalReading(value=0.0, nearest_active_target=None, nearest_distance=inf)
"""

__all__ = [
    "EnvironmentSpec",
    "Rectangle",
    "SignalReading",
    "TargetState",
    "field_value",
    "is_blocked",
    "per_target_signal",
]

import math
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

from ..commons.errors import ProgrammingError
from ..commons.geometry import Point, distance

#: Defines the numerical margin by which obstacle interiors are shrunk for blocking tests.
BLOCKING_TOLERANCE = 1e-9

#: Defines the constant ``sqrt(pi)``.
_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class Rectangle:
    """
    Defines an axis-aligned rectangle by its minimum and maximum corners.

    >>> r = Rectangle.of(Point(0.0, 0.0), Point(4.0, 2.0))
    >>> r.width, r.height
    (4.0, 2.0)
    >>> r.contains(Point(2.0, 1.0)), r.contains(Point(4.0, 1.0))
    (True, False)
    >>> r.inflate(1.0)
    Rectangle(min_corner=Point(x=-1.0, y=-1.0), max_corner=Point(x=5.0, y=3.0))
    """

    #: Defines the corner with the smallest coordinates.
    min_corner: Point

    #: Defines the corner with the largest coordinates.
    max_corner: Point

    @property
    def x0(self) -> float:
        return self.min_corner[0]

    @property
    def y0(self) -> float:
        return self.min_corner[1]

    @property
    def x1(self) -> float:
        return self.max_corner[0]

    @property
    def y1(self) -> float:
        return self.max_corner[1]

    @property
    def width(self) -> float:
        return self.max_corner[0] - self.min_corner[0]

    @property
    def height(self) -> float:
        return self.max_corner[1] - self.min_corner[1]

    def contains(self, p: Point, margin: float = 0.0) -> bool:
        """
        Indicates if the point lies in the open interior of the rectangle grown by ``margin`` on every side.
        """
        return (
            self.min_corner[0] - margin < p[0] < self.max_corner[0] + margin
            and self.min_corner[1] - margin < p[1] < self.max_corner[1] + margin
        )

    def inflate(self, margin: float) -> "Rectangle":
        """
        Returns the rectangle grown by ``margin`` on every side.
        """
        return Rectangle(
            Point(self.min_corner[0] - margin, self.min_corner[1] - margin),
            Point(self.max_corner[0] + margin, self.max_corner[1] + margin),
        )

    def entry(self, p: Point, q: Point, tolerance: float = BLOCKING_TOLERANCE) -> Optional[float]:
        """
        Returns the segment parameter ``t`` in ``[0, 1)`` at which the segment ``p -> q`` enters the interior of the
        rectangle (shrunk by ``tolerance``), or ``None`` if the segment never passes through the interior.

        This is the Liang-Barsky clipping of the segment against the open rectangle. Segments which only touch an
        edge or a corner are not entering.

        >>> r = Rectangle.of(Point(0.0, 0.0), Point(10.0, 10.0))
        >>> round(r.entry(Point(-10.0, 5.0), Point(20.0, 5.0)), 6)
        0.333333
        >>> r.entry(Point(-10.0, 10.0), Point(20.0, 10.0)) is None
        True
        """
        tmin, tmax = 0.0, 1.0
        for lo, hi, a, b in (
            (self.min_corner[0] + tolerance, self.max_corner[0] - tolerance, p[0], q[0]),
            (self.min_corner[1] + tolerance, self.max_corner[1] - tolerance, p[1], q[1]),
        ):
            d = b - a
            if d == 0.0:
                ## Parallel to this slab, must be strictly within it:
                if not lo < a < hi:
                    return None
                continue
            t1, t2 = (lo - a) / d, (hi - a) / d
            if t1 > t2:
                t1, t2 = t2, t1
            tmin, tmax = max(tmin, t1), min(tmax, t2)
            if tmin >= tmax:
                return None
        return tmin

    @classmethod
    def of(cls, min_corner: Point, max_corner: Point) -> "Rectangle":
        """
        Creates a rectangle after checking that the corners are ordered component-wise.
        """
        ProgrammingError.passert(
            min_corner[0] < max_corner[0] and min_corner[1] < max_corner[1],
            "Rectangle corners must satisfy min_corner < max_corner component-wise",
        )
        return cls(Point(float(min_corner[0]), float(min_corner[1])), Point(float(max_corner[0]), float(max_corner[1])))


@dataclass
class TargetState:
    """
    Provides the mutable state of a beacon target.

    Once a target is handled it stops broadcasting for good:

    >>> target = TargetState(Point(1.0, 1.0))
    >>> target.active
    True
    >>> target.deactivate()
    >>> target.active
    False
    """

    #: Location of the target.
    location: Point

    #: Indicates if the target is still broadcasting.
    active: bool = True

    def deactivate(self) -> None:
        """
        Marks the target as handled.
        """
        self.active = False


class SignalReading(NamedTuple):
    """
    Defines a signal measurement taken at a point.
    """

    #: Combined signal strength at the point (``0`` iff no target is active).
    value: float

    #: Index of the active target contributing the strongest signal, if any.
    nearest_active_target: Optional[int]

    #: Distance to that target (``inf`` if there is none).
    nearest_distance: float


@dataclass(frozen=True)
class EnvironmentSpec:
    """
    Defines the world: arena bounds, obstacles, target locations, signal parameters and the swarm size.

    Use :py:meth:`EnvironmentSpec.of` to create validated instances; scenario documents are turned into instances by
    :py:func:`pyrbso.env.scenario.load_scenario`.
    """

    #: Width of the arena.
    width: float

    #: Height of the arena.
    height: float

    #: Obstacles of the arena (overlaps are treated as a union).
    obstacles: Tuple[Rectangle, ...]

    #: Target locations.
    targets: Tuple[Point, ...]

    #: Signal attenuation coefficient ``a``.
    attenuation_a: float

    #: Detection distance ``epsilon``.
    detect_epsilon: float

    #: Number of robots ``N``.
    population_n: int = 1

    @property
    def detection_threshold(self) -> float:
        """
        Signal threshold ``sigma`` above which a single target is treated as found.

        It is derived from ``epsilon`` so that exceeding it is the same as being closer than ``epsilon``.
        """
        return per_target_signal(self.detect_epsilon, self.attenuation_a)

    def in_bounds(self, p: Point) -> bool:
        """
        Indicates if the point lies within the (closed) arena.
        """
        return 0.0 <= p[0] <= self.width and 0.0 <= p[1] <= self.height

    def in_free_space(self, p: Point, margin: float = 0.0) -> bool:
        """
        Indicates if the point is within bounds and outside all obstacle interiors grown by ``margin``.
        """
        return self.in_bounds(p) and not any(o.contains(p, margin) for o in self.obstacles)

    def clamp(self, p: Point) -> Point:
        """
        Clamps the point into the arena.

        >>> EnvironmentSpec.of(10.0, 10.0, [], [], 1.0, 1.0).clamp(Point(-1.0, 12.0))
        Point(x=0.0, y=10.0)
        """
        return Point(min(max(p[0], 0.0), self.width), min(max(p[1], 0.0), self.height))

    def make_targets(self) -> List[TargetState]:
        """
        Creates fresh, broadcasting target states for a run.
        """
        return [TargetState(location) for location in self.targets]

    def check(self) -> List[Tuple[str, str]]:
        """
        Returns the list of violated invariants as ``(field path, reason)`` tuples.
        """
        problems: List[Tuple[str, str]] = []

        ## Check arena and signal parameters:
        if not self.width > 0:
            problems.append(("arena.width", "must be strictly positive"))
        if not self.height > 0:
            problems.append(("arena.height", "must be strictly positive"))
        if not self.attenuation_a > 0:
            problems.append(("signal.a", "must be strictly positive"))
        if not self.detect_epsilon > 0:
            problems.append(("signal.epsilon", "must be strictly positive"))
        if self.population_n < 1:
            problems.append(("robots_random.count", "must be at least 1"))

        ## Check obstacles are inside the arena:
        for i, o in enumerate(self.obstacles):
            if not (self.in_bounds(o.min_corner) and self.in_bounds(o.max_corner)):
                problems.append((f"obstacles[{i}]", "must lie fully inside the arena"))

        ## Check targets are inside the arena and outside obstacles:
        for i, t in enumerate(self.targets):
            if not self.in_bounds(t):
                problems.append((f"targets[{i}]", "must lie inside the arena"))
            elif any(o.contains(t) or _on_boundary(o, t) for o in self.obstacles):
                problems.append((f"targets[{i}]", "must lie strictly outside all obstacles"))

        ## Done, return problems:
        return problems

    @classmethod
    def of(
        cls,
        width: float,
        height: float,
        obstacles: Iterable[Rectangle],
        targets: Iterable[Point],
        attenuation_a: float,
        detect_epsilon: float,
        population_n: int = 1,
    ) -> "EnvironmentSpec":
        """
        Creates an environment specification, raising :py:class:`ValueError` on the first violated invariant.
        """
        spec = cls(
            float(width),
            float(height),
            tuple(obstacles),
            tuple(Point(float(x), float(y)) for x, y in targets),
            float(attenuation_a),
            float(detect_epsilon),
            int(population_n),
        )
        problems = spec.check()
        if problems:
            raise ValueError(f"{problems[0][0]}: {problems[0][1]}")
        return spec


def _on_boundary(rect: Rectangle, p: Point) -> bool:
    """
    Indicates if the point lies on the closed boundary of the rectangle.
    """
    inside_closed = rect.x0 <= p[0] <= rect.x1 and rect.y0 <= p[1] <= rect.y1
    return inside_closed and not rect.contains(p)


def per_target_signal(d: float, a: float) -> float:
    """
    Computes the signal strength of a single target at distance ``d`` with attenuation coefficient ``a``.

    The exponent is linear in ``d``.

    >>> round(per_target_signal(0.0, 10.0), 7)
    0.056419
    >>> round(per_target_signal(100.0, 10.0), 7)
    0.0207554
    """
    return math.exp(-d / (a * a)) / (a * _SQRT_PI)


def field_value(p: Point, targets: Sequence[TargetState], a: float) -> SignalReading:
    """
    Measures the combined signal at ``p``: the maximum contribution over active targets.

    Ties between equidistant targets resolve to the lowest target index.

    >>> targets = [TargetState(Point(10.0, 0.0)), TargetState(Point(50.0, 0.0))]
    >>> reading = field_value(Point(0.0, 0.0), targets, 10.0)
    >>> reading.value == per_target_signal(10.0, 10.0), reading.nearest_active_target
    (True, 0)
    """
    ## Find the nearest active target (the signal is decreasing in distance):
    nearest: Optional[int] = None
    nearest_distance = math.inf
    for index, target in enumerate(targets):
        if not target.active:
            continue
        d = distance(p, target.location)
        if d < nearest_distance:
            nearest, nearest_distance = index, d

    ## No active targets, no signal:
    if nearest is None:
        return SignalReading(0.0, None, math.inf)

    ## Done, return the reading:
    return SignalReading(per_target_signal(nearest_distance, a), nearest, nearest_distance)


def is_blocked(segment: Tuple[Point, Point], obstacles: Iterable[Rectangle]) -> bool:
    """
    Indicates if the open segment passes through the interior of any obstacle.

    >>> box = Rectangle.of(Point(10.0, 10.0), Point(20.0, 20.0))
    >>> is_blocked((Point(0.0, 0.0), Point(5.0, 30.0)), [box])
    False
    >>> is_blocked((Point(0.0, 15.0), Point(30.0, 15.0)), [box])
    True
    >>> is_blocked((Point(0.0, 10.0), Point(30.0, 10.0)), [box])
    False
    """
    p, q = segment
    return any(o.entry(p, q) is not None for o in obstacles)
