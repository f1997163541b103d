"""
This module provides trace files: one JSON object per line and per :py:class:`pyrbso.trace.StepTrace` record, with
sorted keys so that identical runs produce identical bytes.

>>> import io
>>> buffer = io.StringIO()
>>> sink = JsonLinesSink(buffer, Verbosity.EVENTS)
>>> sink(StepTrace(1, 0, 1.5, 2.0, 0.01, "go-to-goal", "none"))
>>> sink(StepTrace(2, 0, 2.5, 2.0, 0.05, "handling", "found:3"))
>>> buffer.getvalue()
'{"event":"found:3","fitness":0.05,"mode":"handling","robot":0,"step":2,"x":2.5,"y":2.0}\\n'
>>> parse_record(buffer.getvalue())
StepTrace(step=2, robot=0, x=2.5, y=2.0, fitness=0.05, mode='handling', event='found:3')
"""

__all__ = [
    "JsonLinesSink",
    "Verbosity",
    "found_events",
    "parse_record",
    "read_trace",
    "trace_path",
]

import json
from enum import Enum
from pathlib import Path
from typing import Iterable, List, TextIO, Tuple, Union

from ..trace import StepTrace, parse_found_tag


class Verbosity(Enum):
    """
    Provides an enumeration of trace verbosity levels.
    """

    #: No trace file.
    NONE = "none"

    #: Event records only (found, arrived, parked).
    EVENTS = "events"

    #: One record per robot per tick.
    FULL = "full"


class JsonLinesSink:
    """
    Provides a trace sink writing JSON lines to a text stream.
    """

    def __init__(self, stream: TextIO, verbosity: Verbosity = Verbosity.FULL) -> None:
        self.stream = stream
        self.verbosity = verbosity

    def __call__(self, record: StepTrace) -> None:
        if self.verbosity is Verbosity.NONE:
            return
        if self.verbosity is Verbosity.EVENTS and not record.is_event:
            return
        self.stream.write(json.dumps(record._asdict(), sort_keys=True, separators=(",", ":")))
        self.stream.write("\n")


def trace_path(directory: Union[str, Path], seed: int) -> Path:
    """
    Returns the trace file path of the given seed.

    >>> trace_path("out", 7).as_posix()
    'out/trace-7.jsonl'
    """
    return Path(directory) / f"trace-{seed}.jsonl"


def parse_record(line: str) -> StepTrace:
    """
    Parses one trace line.
    """
    data = json.loads(line)
    return StepTrace(
        int(data["step"]),
        int(data["robot"]),
        float(data["x"]),
        float(data["y"]),
        float(data["fitness"]),
        str(data["mode"]),
        str(data["event"]),
    )


def read_trace(path: Union[str, Path]) -> List[StepTrace]:
    """
    Reads a trace file.

    :raises OSError: If the file can not be read.
    """
    with Path(path).open(encoding="utf-8") as stream:
        return [parse_record(line) for line in stream if line.strip()]


def found_events(records: Iterable[StepTrace]) -> List[Tuple[int, int]]:
    """
    Extracts ``(target index, step)`` tuples of found events in file order.

    >>> records = [StepTrace(4, 1, 0.0, 0.0, 0.0, "handling", "found:2"), StepTrace(5, 1, 0.0, 0.0, 0.0, "x", "none")]
    >>> found_events(records)
    [(2, 4)]
    """
    found = []
    for record in records:
        target = parse_found_tag(record.event)
        if target is not None:
            found.append((target, record.step))
    return found
