"""
This module provides the step trace record, the reproducibility record of a simulation run, and the trace sink
protocol the simulation emits records to.

Event tags are ``none``, ``found:<target index>``, ``handling``, ``arrived``, ``parked`` and ``waiting``. Of these,
``found:*``, ``arrived`` and ``parked`` mark state transitions and are *events*; ``handling`` and ``waiting`` describe
the robot's condition during the tick.

>>> record = StepTrace(12, 3, 10.0, 20.0, 0.01, "go-to-goal", found_tag(4))
>>> record.event, record.is_event
('found:4', True)
>>> StepTrace(12, 3, 10.0, 20.0, 0.01, "go-to-goal", WAITING).is_event
False
"""

__all__ = [
    "ARRIVED",
    "HANDLING",
    "ListSink",
    "NONE",
    "PARKED",
    "StepTrace",
    "TraceSink",
    "WAITING",
    "found_tag",
    "parse_found_tag",
]

from typing import List, NamedTuple, Optional, Protocol

#: No event.
NONE = "none"

#: Robot is handling a target.
HANDLING = "handling"

#: Robot arrived at its goal.
ARRIVED = "arrived"

#: Robot parked (closest approach, or gave up waiting).
PARKED = "parked"

#: Robot was held back by collision resolution.
WAITING = "waiting"

#: Prefix of found-event tags.
_FOUND = "found:"


def found_tag(target: int) -> str:
    """
    Returns the event tag for finding the given target.
    """
    return f"{_FOUND}{target}"


def parse_found_tag(tag: str) -> Optional[int]:
    """
    Returns the target index of a found-event tag, ``None`` for other tags.

    >>> parse_found_tag("found:7"), parse_found_tag("arrived")
    (7, None)
    """
    return int(tag[len(_FOUND) :]) if tag.startswith(_FOUND) else None  # noqa: E203


class StepTrace(NamedTuple):
    """
    Defines a per-robot, per-tick snapshot.
    """

    #: Global step (motion tick) number.
    step: int

    #: Robot index.
    robot: int

    #: Abscissa of the robot after the tick.
    x: float

    #: Ordinate of the robot after the tick.
    y: float

    #: Signal strength read at the position.
    fitness: float

    #: Motion mode of the robot (or ``handling``).
    mode: str

    #: Event tag.
    event: str

    @property
    def is_event(self) -> bool:
        """
        Indicates if the record marks a state transition.
        """
        return self.event in (ARRIVED, PARKED) or self.event.startswith(_FOUND)


class TraceSink(Protocol):
    """
    Type of callables consuming step trace records.
    """

    def __call__(self, record: StepTrace) -> None:
        ...


class ListSink:
    """
    Provides an in-memory trace sink.

    >>> sink = ListSink()
    >>> sink(StepTrace(1, 0, 0.0, 0.0, 0.0, "arrived", ARRIVED))
    >>> len(sink.records)
    1
    """

    def __init__(self) -> None:
        self.records: List[StepTrace] = []

    def __call__(self, record: StepTrace) -> None:
        self.records.append(record)
