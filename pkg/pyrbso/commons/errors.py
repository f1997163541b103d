"""
This module provides common error definitions and routines for :py:mod:`pyrbso`.
"""

__all__ = ["AssignmentError", "ExperimentError", "PackingError", "ProgrammingError", "ScenarioError"]

from typing import Optional, Tuple


class ProgrammingError(Exception):
    """
    Provides a programming error exception.

    The rationale for this exception is to raise them whenever an internal invariant of the simulation is broken, such
    as the exactness of a partition. Such a failure is never the fault of the scenario author.
    """

    @classmethod
    def passert(cls, condition: bool, message: Optional[str] = None) -> None:
        """
        Raises a :py:class:`ProgrammingError` if the condition is ``False``.

        :param condition: Indicates if the expectation is fulfilled.
        :param message: Message of the error to be raised in case that the condition is not met.
        :raises ProgrammingError: In case that the condition is ``False``.

        >>> ProgrammingError.passert(1 == 0)
        Traceback (most recent call last):
        ...
        pyrbso.commons.errors.ProgrammingError: Broken coherence. Check your code against domain logic to fix it.
        """
        if not condition:
            raise cls(message or "Broken coherence. Check your code against domain logic to fix it.")


class ScenarioError(ValueError):
    """
    Provides an exception indicating that a scenario document can not be parsed or violates an invariant.

    >>> raise ScenarioError("signal.a", "must be strictly positive")
    Traceback (most recent call last):
    ...
    pyrbso.commons.errors.ScenarioError: Invalid scenario at 'signal.a': must be strictly positive
    """

    def __init__(self, path: str, reason: str) -> None:
        """
        Initializes a scenario error.
        """
        ## Keep the slots:
        self.path = path
        self.reason = reason

        ## Set the message:
        super().__init__(f"Invalid scenario at '{path}': {reason}")


class PackingError(RuntimeError):
    """
    Provides an exception indicating that the free space of the arena can not host the requested items.

    >>> raise PackingError("robots", 20, 1000)
    Traceback (most recent call last):
    ...
    pyrbso.commons.errors.PackingError: Can not place 20 robots in free space after 1000 attempts
    """

    def __init__(self, what: str, count: int, attempts: int) -> None:
        """
        Initializes a packing error.
        """
        ## Keep the slots:
        self.what = what
        self.count = count
        self.attempts = attempts

        ## Set the message:
        super().__init__(f"Can not place {count} {what} in free space after {attempts} attempts")


class AssignmentError(ValueError):
    """
    Provides an exception indicating that a cost matrix is not admissible for the assignment solvers.

    >>> raise AssignmentError((2, 3), "cost matrix must be square")
    Traceback (most recent call last):
    ...
    pyrbso.commons.errors.AssignmentError: Cost matrix of shape (2, 3) rejected: cost matrix must be square
    """

    def __init__(self, shape: Tuple[int, ...], reason: str) -> None:
        """
        Initializes an assignment error.
        """
        ## Keep the slots:
        self.shape = shape
        self.reason = reason

        ## Set the message:
        super().__init__(f"Cost matrix of shape {shape} rejected: {reason}")


class ExperimentError(ValueError):
    """
    Provides an exception indicating that an experiment configuration is invalid.
    """
