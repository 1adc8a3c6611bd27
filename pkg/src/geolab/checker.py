"""Randomized numeric soundness checking of conjectured construction properties.

Free points are resampled uniformly from the sampling box with a seeded
generator; a property holds when every defined sample keeps its scale-aware
residual at or below the tolerance.  The verdict is a pure function of
(document, property, trials, seed), so failed runs are reproducible and the
returned witness re-evaluates to the same violation.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import ValidationError
from .kernel import (
    Circle,
    ConstructionDocument,
    Evaluation,
    Line,
    Point,
    Undefined,
    ensure_valid,
    evaluate,
    result_sort,
    with_free_coords,
)
from .kernel.values import SORT_CIRCLE, SORT_LINE, SORT_POINT

SAMPLE_BOX = 10.0            # free points drawn from [-10, 10]^2
RESIDUAL_TOLERANCE = 1e-6
DEGENERATE_FRACTION = 0.5    # more than this fraction Undefined => Degenerate

COLLINEAR = "collinear"
EQUIDISTANT = "equidistant"
PARALLEL = "parallel"
PERPENDICULAR = "perpendicular"
CONCYCLIC = "concyclic"
ON_OBJECT = "on-object"

# argument sorts per property kind; None admits line- or circle-valued steps
_PROPERTY_SORTS: dict[str, tuple[str | None, ...]] = {
    COLLINEAR: (SORT_POINT, SORT_POINT, SORT_POINT),
    EQUIDISTANT: (SORT_POINT, SORT_POINT, SORT_POINT),
    PARALLEL: (SORT_LINE, SORT_LINE),
    PERPENDICULAR: (SORT_LINE, SORT_LINE),
    CONCYCLIC: (SORT_POINT, SORT_POINT, SORT_POINT, SORT_POINT),
    ON_OBJECT: (SORT_POINT, None),
}


class PropertyError(ValidationError):
    """The property references unknown steps or mismatched sorts."""


@dataclass(frozen=True)
class PropertySpec:
    kind: str
    args: tuple[int, ...]


@dataclass(frozen=True)
class Holds:
    samples: int


@dataclass(frozen=True)
class Fails:
    witness: dict[int, tuple[float, float]]
    residual: float


@dataclass(frozen=True)
class Degenerate:
    fraction_undefined: float


CheckVerdict = Holds | Fails | Degenerate


def validate_property(doc: ConstructionDocument, prop: PropertySpec) -> None:
    sorts = _PROPERTY_SORTS.get(prop.kind)
    if sorts is None:
        raise PropertyError(f"unknown property kind {prop.kind!r}")
    if len(prop.args) != len(sorts):
        raise PropertyError(
            f"{prop.kind} takes {len(sorts)} argument(s), got {len(prop.args)}")
    for pos, (arg, want) in enumerate(zip(prop.args, sorts)):
        target = doc.step_by_id(arg)
        if target is None:
            raise PropertyError(f"argument {pos} references unknown step id {arg}")
        got = result_sort(target.kind)
        if want is None:
            if got not in (SORT_LINE, SORT_CIRCLE):
                raise PropertyError(
                    f"argument {pos} must be line- or circle-valued, id {arg} is {got}-valued")
        elif got != want:
            raise PropertyError(
                f"argument {pos} must be {want}-valued, id {arg} is {got}-valued")


def _det3(m) -> float:
    return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))


def _concyclic_det(pts: list[Point]) -> float:
    rows = [(p.x * p.x + p.y * p.y, p.x, p.y, 1.0) for p in pts]
    det = 0.0
    sign = 1.0
    for col in range(4):
        minor = [[rows[r][c] for c in range(4) if c != col] for r in range(1, 4)]
        det += sign * rows[0][col] * _det3(minor)
        sign = -sign
    return det


def residual(prop: PropertySpec, ev: Evaluation) -> float:
    """Scale-aware residual; 0 means the property holds exactly."""
    vals = [ev.value(a) for a in prop.args]
    if prop.kind == COLLINEAR:
        p, q, r = vals
        qx, qy = q.x - p.x, q.y - p.y
        rx, ry = r.x - p.x, r.y - p.y
        cross = qx * ry - qy * rx
        return abs(cross) / max(1.0, math.hypot(qx, qy) * math.hypot(rx, ry))
    if prop.kind == EQUIDISTANT:
        c, p, q = vals
        dp = math.hypot(p.x - c.x, p.y - c.y)
        dq = math.hypot(q.x - c.x, q.y - c.y)
        return abs(dp - dq) / max(1.0, dp)
    if prop.kind == PARALLEL:
        (ux, uy), (vx, vy) = vals[0].direction(), vals[1].direction()
        return abs(ux * vy - uy * vx)
    if prop.kind == PERPENDICULAR:
        (ux, uy), (vx, vy) = vals[0].direction(), vals[1].direction()
        return abs(ux * vx + uy * vy)
    if prop.kind == CONCYCLIC:
        pts = vals
        scale = max(math.hypot(b.x - a.x, b.y - a.y)
                    for i, a in enumerate(pts) for b in pts[i + 1:])
        return abs(_concyclic_det(pts)) / max(1.0, scale) ** 4
    if prop.kind == ON_OBJECT:
        p, obj = vals
        if isinstance(obj, Line):
            return abs(obj.signed_distance(p.x, p.y))
        if isinstance(obj, Circle):
            return abs(math.hypot(p.x - obj.cx, p.y - obj.cy) - obj.r) / max(1.0, obj.r)
        raise PropertyError("on-object target must be a line or circle")
    raise PropertyError(f"unknown property kind {prop.kind!r}")


def check_property(doc: ConstructionDocument, prop: PropertySpec,
                   trials: int, seed: int) -> CheckVerdict:
    ensure_valid(doc)
    validate_property(doc, prop)
    if trials < 1:
        raise PropertyError("trials must be at least 1")

    free_ids = [s.id for s in doc.steps if s.is_free_point()]
    rng = random.Random(seed)
    undefined = 0
    checked = 0
    for _ in range(trials):
        coords = {fid: (rng.uniform(-SAMPLE_BOX, SAMPLE_BOX),
                        rng.uniform(-SAMPLE_BOX, SAMPLE_BOX))
                  for fid in free_ids}
        ev = evaluate(with_free_coords(doc, coords))
        if any(isinstance(ev.value(a), Undefined) for a in prop.args):
            undefined += 1
            continue
        checked += 1
        r = residual(prop, ev)
        if r > RESIDUAL_TOLERANCE:
            return Fails(witness=coords, residual=r)
    if undefined / trials > DEGENERATE_FRACTION:
        return Degenerate(fraction_undefined=undefined / trials)
    return Holds(samples=checked)


def resolve_property(doc: ConstructionDocument, kind: str,
                     names: list[str]) -> PropertySpec:
    """Build a PropertySpec from step labels or numeric ids (CLI surface)."""
    key = kind.strip().lower().replace("_", "-")
    if key == "onobject":
        key = ON_OBJECT
    labels = doc.label_to_id()
    ids = []
    for name in names:
        if name in labels:
            ids.append(labels[name])
        elif name.isdigit():
            ids.append(int(name))
        else:
            raise PropertyError(f"unknown step label {name!r}")
    return PropertySpec(kind=key, args=tuple(ids))
