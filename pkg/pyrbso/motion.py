"""
This module provides the moving-and-evaluating operation of the swarm: every robot moves in lockstep ticks towards its
assigned goal with a modified Bug algorithm, robot-robot conflicts are resolved by index priority, and the signal is
measured after every tick to update personal bests and to detect targets.

Obstacles are handled through their *inflated* rectangles, grown by ``d_safe / 2`` on every side. A blocked robot
walks the perimeter of the inflated rectangle edge by edge (a step never turns a corner), and leaves it Bug2-style as
soon as it is closer to the goal than where it hit the obstacle and the followed obstacle no longer stands between it
and the goal. Any other obstacle on the way out is a new hit. Goals inside an obstacle are unreachable: the robot aims
at the closest point of the obstacle's perimeter instead and parks there.
"""

__all__ = [
    "FoundEvent",
    "MotionMode",
    "MotionParams",
    "MotionState",
    "PhaseOutcome",
    "Perimeter",
    "inflated_obstacles",
    "move_and_evaluate",
    "plan_step",
    "resolve_collisions",
]

import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .commons.errors import ProgrammingError
from .commons.geometry import Point, distance, towards
from .env.world import EnvironmentSpec, Rectangle, TargetState, field_value, is_blocked
from .generation import update_pbest
from .robots import RobotState, Status
from .trace import ARRIVED, HANDLING, NONE, PARKED, WAITING, StepTrace, TraceSink, found_tag

#: Defines the arc-length tolerance for perimeter computations.
_ARC_TOLERANCE = 1e-9


class MotionMode(Enum):
    """
    Provides an enumeration of motion modes.
    """

    #: Moving straight towards the goal.
    GO_TO_GOAL = "go-to-goal"

    #: Walking along the perimeter of an obstacle.
    BOUNDARY_FOLLOW = "boundary-follow"

    #: Reached the goal.
    ARRIVED = "arrived"

    #: Stopped short of the goal for good in this phase.
    PARKED = "parked"

    @property
    def terminal(self) -> bool:
        return self in (MotionMode.ARRIVED, MotionMode.PARKED)


@dataclass(frozen=True)
class MotionParams:
    """
    Defines the motion parameters.
    """

    #: Distance travelled per tick.
    step_length: float

    #: Minimum separation between robots.
    d_safe: float

    #: Maximum number of ticks per evaluation phase ``m_s``.
    max_steps: int

    #: Sampling time of one tick in seconds (informational).
    sample_dt: float = 0.1

    #: Number of consecutive rejected ticks after which a robot parks.
    patience: int = 25

    def __post_init__(self) -> None:
        ProgrammingError.passert(self.step_length > 0, "Step length must be strictly positive")
        ProgrammingError.passert(self.d_safe > 0, "Safe distance must be strictly positive")
        ProgrammingError.passert(self.max_steps >= 1, "Maximum movement steps must be at least 1")
        ProgrammingError.passert(self.patience >= 1, "Patience must be at least 1")

    @property
    def clearance(self) -> float:
        """
        Margin by which obstacles are inflated for motion planning.
        """
        return self.d_safe / 2.0


@dataclass(frozen=True)
class MotionState:
    """
    Defines the motion state of a robot within an evaluation phase.
    """

    #: Motion mode.
    mode: MotionMode = MotionMode.GO_TO_GOAL

    #: Index of the obstacle being followed.
    followed_obstacle: Optional[int] = None

    #: Where the followed obstacle was hit.
    hit_point: Optional[Point] = None

    #: Perimeter walking direction (``+1`` counter-clockwise, ``-1`` clockwise).
    direction: int = 1

    #: Indicates if the walking direction was already reversed once.
    flipped: bool = False

    #: Perimeter length walked since the hit.
    travelled: float = 0.0

    #: Consecutive ticks rejected by collision resolution.
    waited: int = 0

    def following(self, obstacle: int, hit_point: Point, direction: int) -> "MotionState":
        return MotionState(MotionMode.BOUNDARY_FOLLOW, obstacle, hit_point, direction, waited=self.waited)

    def with_mode(self, mode: MotionMode) -> "MotionState":
        return replace(self, mode=mode, followed_obstacle=None, hit_point=None, flipped=False, travelled=0.0)


class Perimeter:
    """
    Provides the arc-length parametrisation of a rectangle's perimeter.

    Arc-length ``s`` runs counter-clockwise from the minimum corner: bottom, right, top and left edges.

    >>> perimeter = Perimeter(Rectangle.of(Point(0.0, 0.0), Point(4.0, 2.0)))
    >>> perimeter.length
    12.0
    >>> perimeter.point(5.0)
    Point(x=4.0, y=1.0)
    >>> perimeter.locate(Point(5.0, 1.0))
    5.0
    >>> perimeter.advance(3.0, 1, 10.0)
    4.0
    >>> perimeter.advance(3.0, -1, 1.0)
    2.0
    """

    def __init__(self, rect: Rectangle) -> None:
        self.rect = rect
        self.w = rect.width
        self.h = rect.height
        self.length = 2.0 * (self.w + self.h)
        self.corners = (0.0, self.w, self.w + self.h, 2.0 * self.w + self.h, self.length)

    def normalize(self, s: float) -> float:
        """
        Wraps the arc-length into ``[0, length)`` and snaps it onto nearby corners.
        """
        s = s % self.length
        for c in self.corners:
            if abs(s - c) < _ARC_TOLERANCE:
                return 0.0 if c == self.length else c
        return s

    def point(self, s: float) -> Point:
        """
        Returns the perimeter point at the given arc-length.
        """
        r, w, h = self.rect, self.w, self.h
        s = self.normalize(s)
        if s < w:
            return Point(r.x0 + s, r.y0)
        if s < w + h:
            return Point(r.x1, r.y0 + (s - w))
        if s < 2.0 * w + h:
            return Point(r.x1 - (s - w - h), r.y1)
        return Point(r.x0, r.y1 - (s - 2.0 * w - h))

    def projections(self, p: Point) -> List[Tuple[float, float]]:
        """
        Returns the distance from ``p`` to each edge (bottom, right, top, left) and the arc-length of the closest point
        of the edge.
        """
        r, w, h = self.rect, self.w, self.h
        cx = min(max(p[0], r.x0), r.x1)
        cy = min(max(p[1], r.y0), r.y1)
        return [
            (math.hypot(p[1] - r.y0, p[0] - cx), self.normalize(cx - r.x0)),
            (math.hypot(p[0] - r.x1, p[1] - cy), self.normalize(w + (cy - r.y0))),
            (math.hypot(p[1] - r.y1, p[0] - cx), self.normalize(w + h + (r.x1 - cx))),
            (math.hypot(p[0] - r.x0, p[1] - cy), self.normalize(2.0 * w + h + (r.y1 - cy))),
        ]

    def locate(self, p: Point) -> float:
        """
        Returns the arc-length of the perimeter point closest to ``p`` (first edge on ties).
        """
        return min(self.projections(p), key=lambda x: x[0])[1]

    def tangent(self, s: float, direction: int) -> Point:
        """
        Returns the unit direction of travel when leaving arc-length ``s`` in the given direction.
        """
        s = self.normalize(s)
        if direction < 0 and s in self.corners:
            ## Leaving a corner clockwise runs along the previous edge:
            s = (s - 0.5 * min(self.w, self.h)) % self.length
        edge = sum(1 for c in self.corners[1:4] if s >= c)
        unit = (Point(1.0, 0.0), Point(0.0, 1.0), Point(-1.0, 0.0), Point(0.0, -1.0))[edge]
        return unit if direction > 0 else unit.scale(-1.0)

    def to_corner(self, s: float, direction: int) -> float:
        """
        Returns the arc distance to the next corner strictly ahead in the given direction.
        """
        s = self.normalize(s)
        if direction > 0:
            return min(c for c in self.corners if c > s) - s
        if s == 0.0:
            s = self.length
        return s - max(c for c in self.corners if c < s)

    def arc(self, s_from: float, s_to: float, direction: int) -> float:
        """
        Returns the arc distance from ``s_from`` to ``s_to`` walking in the given direction.
        """
        value = ((s_to - s_from) if direction > 0 else (s_from - s_to)) % self.length
        return 0.0 if value < _ARC_TOLERANCE or self.length - value < _ARC_TOLERANCE else value

    def advance(self, s: float, direction: int, budget: float) -> float:
        """
        Walks at most ``budget`` from ``s`` in the given direction without turning a corner.
        """
        return self.normalize(s + direction * min(budget, self.to_corner(s, direction)))


@lru_cache(maxsize=32)
def inflated_obstacles(env: EnvironmentSpec, margin: float) -> Tuple[Rectangle, ...]:
    """
    Returns the obstacles of the environment grown by ``margin``.
    """
    return tuple(o.inflate(margin) for o in env.obstacles)


def _aim(goal: Point, obstacles: Sequence[Rectangle], env: EnvironmentSpec) -> Point:
    """
    Returns the point a robot actually heads for: the goal, or the closest in-arena perimeter point of the obstacle
    containing it.
    """
    for o in obstacles:
        if o.contains(goal):
            perimeter = Perimeter(o)
            candidates = [(d, s) for d, s in perimeter.projections(goal) if env.in_bounds(perimeter.point(s))]
            if not candidates:
                return goal
            return perimeter.point(min(candidates, key=lambda x: x[0])[1])
    return goal


def _first_hit(p: Point, q: Point, obstacles: Sequence[Rectangle]) -> Optional[Tuple[int, float]]:
    """
    Returns the index and segment parameter of the first obstacle the segment ``p -> q`` enters, if any.
    """
    hits = [(t, i) for i, o in enumerate(obstacles) for t in (o.entry(p, q),) if t is not None]
    if not hits:
        return None
    t, i = min(hits)
    return i, t


def _heading_change(heading: Point, tangent: Point) -> float:
    """
    Returns the angle between the heading and the tangent.
    """
    return math.atan2(abs(heading[0] * tangent[1] - heading[1] * tangent[0]), heading.dot(tangent))


def _choose_direction(perimeter: Perimeter, s: float, heading: Point) -> int:
    """
    Chooses the perimeter direction requiring the smaller heading change (counter-clockwise on ties).
    """
    ccw = _heading_change(heading, perimeter.tangent(s, +1))
    cw = _heading_change(heading, perimeter.tangent(s, -1))
    return -1 if cw < ccw - 1e-12 else +1


def _follow(
    position: Point,
    state: MotionState,
    aim: Point,
    goal: Point,
    env: EnvironmentSpec,
    obstacles: Sequence[Rectangle],
    budget: float,
) -> Tuple[Point, MotionState]:
    """
    Walks the perimeter of the followed obstacle by at most ``budget``.
    """
    ProgrammingError.passert(state.followed_obstacle is not None, "Boundary following requires an obstacle")
    perimeter = Perimeter(obstacles[state.followed_obstacle])  # type: ignore[index]
    s = perimeter.locate(position)
    hit = state.hit_point if state.hit_point is not None else position

    ## A full loop visits every closest approach, so no leave point exists on this obstacle:
    if state.travelled >= perimeter.length:
        return position, state.with_mode(MotionMode.PARKED)

    ## Try the current direction, then the reverse one if it was never reversed:
    attempts = [state] if state.flipped else [state, replace(state, direction=-state.direction, flipped=True)]
    s_aim = perimeter.locate(aim) if _on(perimeter, aim) else None
    for attempt in attempts:
        to_aim = math.inf if s_aim is None else perimeter.arc(s, s_aim, attempt.direction)
        step = min(budget, perimeter.to_corner(s, attempt.direction), to_aim)
        proposal = aim if step == to_aim else perimeter.point(s + attempt.direction * step)
        if not env.in_bounds(proposal) or is_blocked((position, proposal), obstacles):
            continue
        if step == to_aim:
            next_state = replace(attempt, travelled=attempt.travelled + step)
            return proposal, next_state.with_mode(MotionMode.ARRIVED if aim == goal else MotionMode.PARKED)

        ## Stop at the closest approach to the aim on this edge:
        approach = _closest_approach(position, proposal, aim, hit)
        if approach is not None:
            proposal, step = approach, distance(position, approach)
        return proposal, replace(attempt, travelled=attempt.travelled + step)

    ## Stuck in both directions:
    return position, state.with_mode(MotionMode.PARKED)


def _closest_approach(p: Point, q: Point, aim: Point, hit: Point) -> Optional[Point]:
    """
    Returns the point of the straight walk ``p -> q`` closest to the aim, if it lies strictly between ``p`` and ``q``
    and is closer to the aim than the hit point.

    >>> _closest_approach(Point(0.0, 0.0), Point(0.0, 4.0), Point(5.0, 1.0), Point(0.0, -9.0))
    Point(x=0.0, y=1.0)
    >>> _closest_approach(Point(0.0, 0.0), Point(0.0, 4.0), Point(5.0, 9.0), Point(0.0, -9.0)) is None
    True
    """
    walk = q - p
    length2 = walk.dot(walk)
    if length2 == 0.0:
        return None
    t = (aim - p).dot(walk) / length2
    if not _ARC_TOLERANCE < t < 1.0 - _ARC_TOLERANCE:
        return None
    approach = p + walk.scale(t)
    return approach if distance(approach, aim) < distance(hit, aim) else None


def _on(perimeter: Perimeter, p: Point) -> bool:
    """
    Indicates if the point lies on the perimeter.
    """
    return distance(perimeter.point(perimeter.locate(p)), p) < 1e-7


def plan_step(
    position: Point, state: MotionState, goal: Point, env: EnvironmentSpec, params: MotionParams
) -> Tuple[Point, MotionState]:
    """
    Proposes the next position of a robot and its next motion state.

    Robot-robot conflicts are not considered here; see :py:func:`resolve_collisions`.

    >>> env = EnvironmentSpec.of(100.0, 100.0, [], [], 10.0, 5.0)
    >>> params = MotionParams(step_length=2.0, d_safe=3.0, max_steps=500)
    >>> position, state = plan_step(Point(0.0, 0.0), MotionState(), Point(10.0, 0.0), env, params)
    >>> position, state.mode
    (Point(x=2.0, y=0.0), <MotionMode.GO_TO_GOAL: 'go-to-goal'>)
    >>> plan_step(Point(9.0, 0.0), MotionState(), Point(10.0, 0.0), env, params)[1].mode
    <MotionMode.ARRIVED: 'arrived'>
    """
    ## Terminal robots stay put:
    if state.mode.terminal:
        return position, state

    ## Prepare obstacles and the point we are actually heading for:
    obstacles = inflated_obstacles(env, params.clearance)
    aim = _aim(goal, obstacles, env)
    arrival = MotionMode.ARRIVED if aim == goal else MotionMode.PARKED

    ## Boundary following: leave when closer than the hit point and past the followed obstacle, otherwise keep walking:
    if state.mode is MotionMode.BOUNDARY_FOLLOW:
        hit = state.hit_point if state.hit_point is not None else position
        followed = obstacles[state.followed_obstacle]  # type: ignore[index]
        if distance(position, aim) < distance(hit, aim) and followed.entry(position, aim) is None:
            state = state.with_mode(MotionMode.GO_TO_GOAL)
        else:
            return _follow(position, state, aim, goal, env, obstacles, params.step_length)

    ## Already there:
    if position == aim:
        return position, state.with_mode(arrival)

    ## Go to goal: one step along the straight line:
    proposal = towards(position, aim, params.step_length)
    hit = _first_hit(position, proposal, obstacles)
    if hit is None:
        return proposal, (state.with_mode(arrival) if proposal == aim else state)

    ## Blocked: move up to the obstacle and start following its perimeter:
    index, t = hit
    perimeter = Perimeter(obstacles[index])
    entry = Point(position[0] + t * (proposal[0] - position[0]), position[1] + t * (proposal[1] - position[1]))
    s = perimeter.locate(entry)
    contact = perimeter.point(s)
    direction = _choose_direction(perimeter, s, aim - position)
    following = state.following(index, contact, direction)
    if is_blocked((position, contact), obstacles) or not env.in_bounds(contact):
        return position, following
    final, following = _follow(
        contact, following, aim, goal, env, obstacles, max(0.0, params.step_length - distance(position, contact))
    )
    if final != contact and is_blocked((position, final), obstacles):
        return contact, following
    return final, following


def resolve_collisions(
    proposals: Sequence[Point],
    current: Sequence[Point],
    params: MotionParams,
    stationary: Optional[Sequence[bool]] = None,
) -> Tuple[List[Point], List[bool]]:
    """
    Resolves robot-robot conflicts in ascending robot index order.

    A proposal is accepted iff it keeps ``d_safe`` from every already accepted position of this tick and from the
    current position of every robot not yet processed. Rejected and stationary robots hold their current position.

    >>> params = MotionParams(step_length=2.0, d_safe=3.0, max_steps=500)
    >>> resolve_collisions([Point(5.0, 0.0), Point(5.0, 0.0)], [Point(0.0, 0.0), Point(10.0, 0.0)], params)
    ([Point(x=5.0, y=0.0), Point(x=10.0, y=0.0)], [True, False])
    """
    n = len(proposals)
    ProgrammingError.passert(len(current) == n, "One proposal per robot is required")
    stationary = stationary if stationary is not None else [False] * n

    ## Start from current positions, overwrite as proposals get accepted:
    final = np.asarray(current, dtype=float).reshape(n, 2)
    accepted = [False] * n
    for i in range(n):
        if stationary[i]:
            continue
        proposal = np.asarray(proposals[i], dtype=float)
        others = np.delete(final, i, axis=0)
        if others.size == 0 or float(np.min(np.hypot(*(others - proposal).T))) >= params.d_safe:
            final[i] = proposal
            accepted[i] = True

    ## Done, return positions and acceptance:
    return [proposals[i] if accepted[i] else current[i] for i in range(n)], accepted


class FoundEvent(NamedTuple):
    """
    Defines a target detection.
    """

    #: Index of the target found.
    target: int

    #: Global step of the detection.
    step: int

    #: Index of the robot which found it.
    robot: int

    #: Position of the robot at detection.
    position: Point


class PhaseOutcome(NamedTuple):
    """
    Defines the outcome of an evaluation phase.
    """

    #: Robot states at the end of the phase.
    swarm: List[RobotState]

    #: Targets found during the phase in order of detection.
    events: List[FoundEvent]

    #: Number of ticks the phase took.
    ticks: int


def move_and_evaluate(
    swarm: Sequence[RobotState],
    goals: Sequence[Point],
    env: EnvironmentSpec,
    targets: Sequence[TargetState],
    params: MotionParams,
    start_step: int = 0,
    budget: Optional[int] = None,
    sink: Optional[TraceSink] = None,
) -> PhaseOutcome:
    """
    Moves all robots towards their goals in lockstep ticks, measuring the signal after every tick.

    The phase ends when every robot has arrived, parked or is handling a target, after ``m_s`` ticks, or when the
    remaining global ``budget`` is exhausted. A robot closer than ``epsilon`` to an active target deactivates it and
    handles it for the rest of the phase; robots are evaluated in index order so exactly one robot handles a target.

    :param swarm: Robot states at the beginning of the phase.
    :param goals: Goal of each robot.
    :param env: Environment.
    :param targets: Target states (deactivated in place).
    :param params: Motion parameters.
    :param start_step: Global step before the first tick of the phase.
    :param budget: Remaining global ticks (unbounded if ``None``).
    :param sink: Trace sink receiving one record per robot per tick.
    :return: Phase outcome.
    """
    ProgrammingError.passert(len(goals) == len(swarm), "One goal per robot is required")
    robots = list(swarm)
    states = [MotionState() for _ in robots]
    events: List[FoundEvent] = []
    limit = params.max_steps if budget is None else min(params.max_steps, budget)

    ticks = 0
    while ticks < limit:
        ## Check if everybody is done:
        stationary = [r.status is Status.HANDLING or s.mode.terminal for r, s in zip(robots, states)]
        if all(stationary):
            break
        ticks += 1
        step = start_step + ticks

        ## Plan all robots on the frozen snapshot, then resolve conflicts:
        current = [r.position for r in robots]
        plans = [
            (current[i], states[i]) if stationary[i] else plan_step(current[i], states[i], goals[i], env, params)
            for i in range(len(robots))
        ]
        finals, accepted = resolve_collisions([p for p, _ in plans], current, params, stationary)

        ## Commit moves and motion states:
        tags = [HANDLING if r.status is Status.HANDLING else NONE for r in robots]
        for i, robot in enumerate(robots):
            if stationary[i]:
                continue
            if accepted[i]:
                robots[i] = robot.moved(finals[i])
                states[i] = replace(plans[i][1], waited=0)
            else:
                states[i] = replace(states[i], waited=states[i].waited + 1)
                tags[i] = WAITING
                if states[i].waited >= params.patience or _goal_taken(goals[i], i, robots, states, params):
                    states[i] = states[i].with_mode(MotionMode.PARKED)
            if states[i].mode.terminal:
                robots[i] = robots[i].with_status(Status.IDLE)
                tags[i] = ARRIVED if states[i].mode is MotionMode.ARRIVED else PARKED

        ## Evaluate the signal, update personal bests and detect targets in index order:
        for i, robot in enumerate(robots):
            reading = field_value(robot.position, targets, env.attenuation_a)
            if robot.status is not Status.HANDLING:
                robot = robot.with_pbest(update_pbest(robot.pbest, robot.position, reading))
                k = reading.nearest_active_target
                if k is not None and reading.nearest_distance < env.detect_epsilon:
                    targets[k].deactivate()
                    robot = robot.with_status(Status.HANDLING)
                    events.append(FoundEvent(k, step, i, robot.position))
                    tags[i] = found_tag(k)
                robots[i] = robot
            if sink is not None:
                mode = HANDLING if robot.status is Status.HANDLING else states[i].mode.value
                sink(StepTrace(step, i, robot.position[0], robot.position[1], reading.value, mode, tags[i]))

    ## Handlers and idle robots rejoin the search at the next grouping:
    robots = [r.with_status(Status.SEARCHING) for r in robots]
    return PhaseOutcome(robots, events, ticks)


def _goal_taken(
    goal: Point, index: int, robots: Sequence[RobotState], states: Sequence[MotionState], params: MotionParams
) -> bool:
    """
    Indicates if the goal is occupied by a robot which is not going to move in this phase.
    """
    return any(
        j != index
        and (r.status is Status.HANDLING or s.mode.terminal)
        and distance(r.position, goal) < params.d_safe
        for j, (r, s) in enumerate(zip(robots, states))
    )
