"""Evaluation of construction documents into concrete geometric values.

Evaluation is a pure function of the document: identical documents produce
bit-identical results.  Degenerate configurations (parallel lines, missing
intersections, coincident defining points) evaluate to Undefined with a
reason; they are never errors and never produce non-finite numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (
    CIRCLE_CENTER_POINT,
    FREE_POINT,
    INTERSECT_CIRCLE_CIRCLE,
    INTERSECT_LINE_CIRCLE,
    INTERSECT_LINE_LINE,
    LINE_THROUGH_POINTS,
    MIDPOINT,
    PARALLEL_THROUGH,
    PERPENDICULAR_THROUGH,
    ConstructionDocument,
    ConstructionStep,
    ensure_valid,
)
from .values import (
    EPSILON,
    Circle,
    GeometricValue,
    Line,
    Point,
    Undefined,
    line_through,
    line_with_direction,
)


@dataclass(frozen=True)
class Evaluation:
    values: dict[int, GeometricValue]
    epsilon: float

    def value(self, step_id: int) -> GeometricValue:
        return self.values[step_id]

    def defined(self, step_id: int) -> bool:
        return not isinstance(self.values[step_id], Undefined)


def _intersect_line_line(l1: Line, l2: Line, eps: float) -> GeometricValue:
    det = l1.a * l2.b - l2.a * l1.b
    if abs(det) <= eps:
        return Undefined("parallel")
    x = (l1.b * l2.c - l2.b * l1.c) / det
    y = (l2.a * l1.c - l1.a * l2.c) / det
    return Point(x, y)


def _intersect_line_circle(line: Line, circle: Circle, branch: int,
                           eps: float) -> GeometricValue:
    # Signed distance of the center; the chord half-length h follows from
    # the discriminant r^2 - d^2.
    d = line.signed_distance(circle.cx, circle.cy)
    disc = circle.r * circle.r - d * d
    if disc < -eps:
        return Undefined("line misses circle")
    if disc < eps:
        return Undefined("tangency degenerate")
    h = math.sqrt(disc)
    fx = circle.cx - d * line.a
    fy = circle.cy - d * line.b
    ux, uy = line.direction()
    # Branches ordered by increasing parameter along the canonical direction.
    if branch == 0:
        return Point(fx - h * ux, fy - h * uy)
    return Point(fx + h * ux, fy + h * uy)


def _intersect_circle_circle(c1: Circle, c2: Circle, branch: int,
                             eps: float) -> GeometricValue:
    dx = c2.cx - c1.cx
    dy = c2.cy - c1.cy
    d = math.hypot(dx, dy)
    if d <= eps:
        return Undefined("concentric centers")
    a = (d * d + c1.r * c1.r - c2.r * c2.r) / (2.0 * d)
    disc = c1.r * c1.r - a * a
    if disc < -eps:
        return Undefined("circles do not intersect")
    if disc < eps:
        return Undefined("tangency degenerate")
    h = math.sqrt(disc)
    ux, uy = dx / d, dy / d
    mx = c1.cx + a * ux
    my = c1.cy + a * uy
    # Branch 0 lies on the positive side of the oriented center line c1->c2.
    px, py = -uy, ux
    if branch == 0:
        return Point(mx + h * px, my + h * py)
    return Point(mx - h * px, my - h * py)


def _evaluate_step(s: ConstructionStep, got: list[GeometricValue],
                   eps: float) -> GeometricValue:
    if s.kind == FREE_POINT:
        return Point(float(s.x), float(s.y))
    if s.kind == MIDPOINT:
        p, q = got
        return Point((p.x + q.x) / 2.0, (p.y + q.y) / 2.0)
    if s.kind == LINE_THROUGH_POINTS:
        p, q = got
        return line_through(p.x, p.y, q.x, q.y, eps)
    if s.kind == PERPENDICULAR_THROUGH:
        line, t = got
        return line_with_direction(t.x, t.y, line.a, line.b, eps)
    if s.kind == PARALLEL_THROUGH:
        line, t = got
        ux, uy = line.direction()
        return line_with_direction(t.x, t.y, ux, uy, eps)
    if s.kind == CIRCLE_CENTER_POINT:
        center, on = got
        r = math.hypot(on.x - center.x, on.y - center.y)
        if r <= eps:
            return Undefined("zero radius")
        return Circle(center.x, center.y, r)
    if s.kind == INTERSECT_LINE_LINE:
        return _intersect_line_line(got[0], got[1], eps)
    if s.kind == INTERSECT_LINE_CIRCLE:
        return _intersect_line_circle(got[0], got[1], s.branch, eps)
    if s.kind == INTERSECT_CIRCLE_CIRCLE:
        return _intersect_circle_circle(got[0], got[1], s.branch, eps)
    raise AssertionError(f"unreachable kind {s.kind}")  # guarded by validate


def evaluate(doc: ConstructionDocument, epsilon: float = EPSILON) -> Evaluation:
    """Evaluate a valid document in order; rejects invalid documents."""
    ensure_valid(doc)
    values: dict[int, GeometricValue] = {}
    for s in doc.steps:
        got = [values[a] for a in s.args]
        undef = next((a for a, v in zip(s.args, got) if isinstance(v, Undefined)), None)
        if undef is not None:
            values[s.id] = Undefined(f"undefined argument {undef}")
        else:
            values[s.id] = _evaluate_step(s, got, epsilon)
    return Evaluation(values=values, epsilon=epsilon)
