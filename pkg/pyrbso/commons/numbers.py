"""
This module provides common numeric predicates and functions.
"""

__all__ = ["is_probability", "logsig"]

import math


def is_probability(value: float) -> bool:
    """
    Indicates if the value is a number within ``[0, 1]``.

    >>> is_probability(0.4)
    True
    >>> is_probability(1.0)
    True
    >>> is_probability(-0.1)
    False
    >>> is_probability(float("nan"))
    False
    """
    return 0.0 <= value <= 1.0


def logsig(x: float) -> float:
    """
    Computes the logistic sigmoid ``1 / (1 + e^(-x))`` without overflowing for large negative ``x``.

    >>> logsig(0.0)
    0.5
    >>> f"{logsig(-10.0):.6e}"
    '4.539787e-05'
    >>> logsig(-1000.0)
    0.0
    """
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)
