"""Geometric values produced by evaluating construction steps.

Lines are kept in normalized implicit form ``a*x + b*y + c = 0`` with
``a**2 + b**2 == 1`` and a canonical sign (``a > eps``, or ``|a| <= eps``
and ``b > 0``) so that equal lines compare equal and serialized output is
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Degeneracy tolerance, absolute, applied to determinants, discriminants
# and distances.  Anything below it is treated as degenerate.
EPSILON = 1e-9


@dataclass(frozen=True)
class Point:
    x: float
    y: float


@dataclass(frozen=True)
class Line:
    a: float
    b: float
    c: float

    def direction(self) -> tuple[float, float]:
        """Canonical direction vector along the line."""
        return (-self.b, self.a)

    def signed_distance(self, x: float, y: float) -> float:
        return self.a * x + self.b * y + self.c


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float


@dataclass(frozen=True)
class Undefined:
    reason: str


GeometricValue = Point | Line | Circle | Undefined

SORT_POINT = "point"
SORT_LINE = "line"
SORT_CIRCLE = "circle"


def sort_of(value: GeometricValue) -> str | None:
    """Object sort of a defined value, None for Undefined."""
    if isinstance(value, Point):
        return SORT_POINT
    if isinstance(value, Line):
        return SORT_LINE
    if isinstance(value, Circle):
        return SORT_CIRCLE
    return None


def canonical_line(a: float, b: float, c: float, eps: float = EPSILON) -> Line | Undefined:
    """Normalize an implicit line and fix its sign; degenerate if |(a,b)| <= eps."""
    norm = math.hypot(a, b)
    if norm <= eps:
        return Undefined("degenerate line direction")
    a, b, c = a / norm, b / norm, c / norm
    if a > eps:
        pass
    elif a < -eps:
        a, b, c = -a, -b, -c
    elif b < 0.0:
        a, b, c = -a, -b, -c
    return Line(a, b, c)


def line_through(x1: float, y1: float, x2: float, y2: float,
                 eps: float = EPSILON) -> Line | Undefined:
    """Line through two points; Undefined when the points coincide."""
    if math.hypot(x2 - x1, y2 - y1) <= eps:
        return Undefined("coincident points")
    a = y2 - y1
    b = x1 - x2
    c = -(a * x1 + b * y1)
    return canonical_line(a, b, c, eps)


def line_with_direction(px: float, py: float, ux: float, uy: float,
                        eps: float = EPSILON) -> Line | Undefined:
    """Line through (px, py) with direction (ux, uy)."""
    a = uy
    b = -ux
    c = -(a * px + b * py)
    return canonical_line(a, b, c, eps)
