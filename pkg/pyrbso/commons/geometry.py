"""
This module provides 2-D point definitions and elementary planar geometry.
"""

__all__ = ["Point", "distance", "interpolate", "towards"]

import math
from typing import NamedTuple


class Point(NamedTuple):
    """
    Defines a 2-D point (or vector) in arena coordinates.

    Points are plain tuples: they unpack, compare and hash as ``(x, y)``.

    >>> p = Point(3.0, 4.0)
    >>> x, y = p
    >>> (x, y)
    (3.0, 4.0)
    >>> p + Point(1.0, 1.0)
    Point(x=4.0, y=5.0)
    >>> p - Point(1.0, 1.0)
    Point(x=2.0, y=3.0)
    >>> p.scale(2.0)
    Point(x=6.0, y=8.0)
    >>> p.norm
    5.0
    """

    #: Defines the abscissa.
    x: float

    #: Defines the ordinate.
    y: float

    def __add__(self, other: "Point") -> "Point":  # type: ignore[override]
        return Point(self[0] + other[0], self[1] + other[1])

    def __sub__(self, other: "Point") -> "Point":
        return Point(self[0] - other[0], self[1] - other[1])

    def scale(self, factor: float) -> "Point":
        """
        Returns the point scaled by the given factor.
        """
        return Point(self[0] * factor, self[1] * factor)

    def dot(self, other: "Point") -> float:
        """
        Returns the dot product with the other vector.
        """
        return self[0] * other[0] + self[1] * other[1]

    @property
    def norm(self) -> float:
        """
        Euclidean norm of the vector.
        """
        return math.hypot(self[0], self[1])


def distance(p: Point, q: Point) -> float:
    """
    Returns the Euclidean distance between two points.

    >>> distance(Point(0.0, 0.0), Point(3.0, 4.0))
    5.0
    """
    return math.hypot(p[0] - q[0], p[1] - q[1])


def interpolate(p: Point, q: Point, r: float) -> Point:
    """
    Returns the convex combination ``r * p + (1 - r) * q``.

    >>> interpolate(Point(0.0, 0.0), Point(10.0, 0.0), 0.5)
    Point(x=5.0, y=0.0)
    >>> interpolate(Point(0.0, 0.0), Point(10.0, 0.0), 1.0)
    Point(x=0.0, y=0.0)
    """
    return Point(r * p[0] + (1.0 - r) * q[0], r * p[1] + (1.0 - r) * q[1])


def towards(p: Point, q: Point, length: float) -> Point:
    """
    Returns the point reached by moving from ``p`` towards ``q`` by ``length``, never overshooting ``q``.

    >>> towards(Point(0.0, 0.0), Point(10.0, 0.0), 2.0)
    Point(x=2.0, y=0.0)
    >>> towards(Point(0.0, 0.0), Point(1.0, 0.0), 2.0)
    Point(x=1.0, y=0.0)
    """
    d = distance(p, q)
    if d <= length:
        return q
    return Point(p[0] + (q[0] - p[0]) * length / d, p[1] + (q[1] - p[1]) * length / d)
