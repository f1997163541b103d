"""
This module provides the state model of member robots.
"""

__all__ = ["RobotState", "Status"]

from dataclasses import dataclass, replace
from enum import Enum

from .commons.geometry import Point, distance
from .generation import PersonalBest


class Status(Enum):
    """
    Provides an enumeration of robot activity statuses.
    """

    #: Moving towards its goal and measuring the signal.
    SEARCHING = "searching"

    #: Staying at a found target until the evaluation phase ends.
    HANDLING = "handling"

    #: Done with the current goal (arrived or parked), waiting for the next grouping.
    IDLE = "idle"


@dataclass(frozen=True)
class RobotState:
    """
    Provides the value object model of a member robot.

    >>> robot = RobotState(Point(0.0, 0.0), PersonalBest(Point(0.0, 0.0), 0.0))
    >>> robot.status.value
    'searching'
    >>> moved = robot.moved(Point(3.0, 4.0))
    >>> moved.position, moved.path_length
    (Point(x=3.0, y=4.0), 5.0)
    """

    #: Current position.
    position: Point

    #: Personal best.
    pbest: PersonalBest

    #: Activity status.
    status: Status = Status.SEARCHING

    #: Total distance travelled so far.
    path_length: float = 0.0

    def moved(self, position: Point) -> "RobotState":
        """
        Returns the robot moved to the given position, accumulating the travelled distance.
        """
        return replace(self, position=position, path_length=self.path_length + distance(self.position, position))

    def with_status(self, status: Status) -> "RobotState":
        return replace(self, status=status)

    def with_pbest(self, pbest: PersonalBest) -> "RobotState":
        return replace(self, pbest=pbest)
