"""Construction documents: dependency-ordered step lists and editing primitives.

A document is an immutable ordered list of steps forming a DAG: free points
carry coordinates, every other step references strictly earlier steps.  All
editing operations return new documents; nothing is mutated in place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from ..errors import EditError, InvalidDocument
from .values import SORT_CIRCLE, SORT_LINE, SORT_POINT

FORMAT_VERSION = 1

# Labels ride in sync deltas and listings; keep them bounded.
MAX_LABEL_LENGTH = 64

FREE_POINT = "FreePoint"
MIDPOINT = "Midpoint"
LINE_THROUGH_POINTS = "LineThroughPoints"
PERPENDICULAR_THROUGH = "PerpendicularThrough"
PARALLEL_THROUGH = "ParallelThrough"
CIRCLE_CENTER_POINT = "CircleCenterPoint"
INTERSECT_LINE_LINE = "IntersectLineLine"
INTERSECT_LINE_CIRCLE = "IntersectLineCircle"
INTERSECT_CIRCLE_CIRCLE = "IntersectCircleCircle"


@dataclass(frozen=True)
class StepSignature:
    arg_sorts: tuple[str, ...]
    result_sort: str
    branched: bool = False


SIGNATURES: dict[str, StepSignature] = {
    FREE_POINT: StepSignature((), SORT_POINT),
    MIDPOINT: StepSignature((SORT_POINT, SORT_POINT), SORT_POINT),
    LINE_THROUGH_POINTS: StepSignature((SORT_POINT, SORT_POINT), SORT_LINE),
    PERPENDICULAR_THROUGH: StepSignature((SORT_LINE, SORT_POINT), SORT_LINE),
    PARALLEL_THROUGH: StepSignature((SORT_LINE, SORT_POINT), SORT_LINE),
    CIRCLE_CENTER_POINT: StepSignature((SORT_POINT, SORT_POINT), SORT_CIRCLE),
    INTERSECT_LINE_LINE: StepSignature((SORT_LINE, SORT_LINE), SORT_POINT),
    INTERSECT_LINE_CIRCLE: StepSignature((SORT_LINE, SORT_CIRCLE), SORT_POINT, branched=True),
    INTERSECT_CIRCLE_CIRCLE: StepSignature((SORT_CIRCLE, SORT_CIRCLE), SORT_POINT, branched=True),
}


@dataclass(frozen=True)
class ConstructionStep:
    id: int
    kind: str
    args: tuple[int, ...] = ()
    x: float | None = None
    y: float | None = None
    branch: int | None = None
    label: str | None = None

    def is_free_point(self) -> bool:
        return self.kind == FREE_POINT


def free_point(x: float, y: float, label: str | None = None,
               step_id: int = 0) -> ConstructionStep:
    return ConstructionStep(id=step_id, kind=FREE_POINT, x=float(x), y=float(y), label=label)


def step(kind: str, args: Iterable[int], branch: int | None = None,
         label: str | None = None, step_id: int = 0) -> ConstructionStep:
    return ConstructionStep(id=step_id, kind=kind, args=tuple(args), branch=branch, label=label)


@dataclass(frozen=True)
class ConstructionDocument:
    steps: tuple[ConstructionStep, ...] = ()
    format_version: int = FORMAT_VERSION
    # Id allocation high-water mark for this document's editing lifetime.
    # Not serialized and excluded from equality; None derives max(id)+1.
    next_id: int | None = field(default=None, compare=False)

    def effective_next_id(self) -> int:
        if self.next_id is not None:
            return self.next_id
        return self.steps[-1].id + 1 if self.steps else 0

    def step_by_id(self, step_id: int) -> ConstructionStep | None:
        for s in self.steps:
            if s.id == step_id:
                return s
        return None

    def ids(self) -> tuple[int, ...]:
        return tuple(s.id for s in self.steps)

    def label_to_id(self) -> dict[str, int]:
        return {s.label: s.id for s in self.steps if s.label is not None}


@dataclass(frozen=True)
class Violation:
    step_id: int | None
    code: str
    message: str


def result_sort(kind: str) -> str | None:
    sig = SIGNATURES.get(kind)
    return sig.result_sort if sig else None


def _finite(v: float | None) -> bool:
    return isinstance(v, (int, float)) and math.isfinite(v)


def validate(doc: ConstructionDocument) -> list[Violation]:
    """Check every structural invariant; an empty list means the document is ok."""
    violations: list[Violation] = []
    if doc.format_version != FORMAT_VERSION:
        violations.append(Violation(None, "version",
                                    f"unsupported format_version {doc.format_version!r}"))

    seen_sort: dict[int, str] = {}
    seen_labels: dict[str, int] = {}
    prev_id = -1
    for s in doc.steps:
        if not isinstance(s.id, int) or s.id < 0:
            violations.append(Violation(s.id, "id-order", "step id must be a non-negative integer"))
        elif s.id <= prev_id:
            violations.append(Violation(s.id, "id-order",
                                        f"step id {s.id} does not increase past {prev_id}"))
        sig = SIGNATURES.get(s.kind)
        if sig is None:
            violations.append(Violation(s.id, "kind", f"unknown step kind {s.kind!r}"))
            prev_id = max(prev_id, s.id if isinstance(s.id, int) else prev_id)
            continue

        if len(s.args) != len(sig.arg_sorts):
            violations.append(Violation(
                s.id, "arity",
                f"{s.kind} takes {len(sig.arg_sorts)} argument(s), got {len(s.args)}"))
        else:
            for pos, arg in enumerate(s.args):
                if not isinstance(arg, int):
                    violations.append(Violation(s.id, "unknown-ref",
                                                f"argument {pos} is not a step id"))
                elif arg >= s.id:
                    violations.append(Violation(
                        s.id, "forward-ref",
                        f"argument {pos} references id {arg} which does not precede step {s.id}"))
                elif arg not in seen_sort:
                    violations.append(Violation(
                        s.id, "unknown-ref",
                        f"argument {pos} references unknown id {arg}"))
                elif seen_sort[arg] != sig.arg_sorts[pos]:
                    violations.append(Violation(
                        s.id, "sort-mismatch",
                        f"{s.kind} argument {pos} must be {sig.arg_sorts[pos]}-valued, "
                        f"id {arg} is {seen_sort[arg]}-valued"))

        if s.kind == FREE_POINT:
            if not (_finite(s.x) and _finite(s.y)):
                violations.append(Violation(s.id, "coords",
                                            "FreePoint requires finite x and y"))
        else:
            if s.x is not None or s.y is not None:
                violations.append(Violation(s.id, "coords",
                                            f"{s.kind} does not carry coordinates"))

        if sig.branched:
            if s.branch not in (0, 1):
                violations.append(Violation(s.id, "branch", f"{s.kind} requires branch 0 or 1"))
        elif s.branch is not None:
            violations.append(Violation(s.id, "branch", f"{s.kind} does not take a branch"))

        if s.label is not None:
            if not isinstance(s.label, str) or not s.label or len(s.label) > MAX_LABEL_LENGTH:
                violations.append(Violation(
                    s.id, "label",
                    f"label must be a non-empty string of at most {MAX_LABEL_LENGTH} chars"))
            elif s.label in seen_labels:
                violations.append(Violation(
                    s.id, "dup-label",
                    f"label {s.label!r} already used by step {seen_labels[s.label]}"))
            else:
                seen_labels[s.label] = s.id

        if isinstance(s.id, int):
            seen_sort[s.id] = sig.result_sort
            prev_id = max(prev_id, s.id)
    return violations


def ensure_valid(doc: ConstructionDocument) -> ConstructionDocument:
    violations = validate(doc)
    if violations:
        raise InvalidDocument(violations)
    return doc


def _coerced(s: ConstructionStep) -> ConstructionStep:
    if s.kind == FREE_POINT and (isinstance(s.x, int) or isinstance(s.y, int)):
        return replace(s, x=float(s.x), y=float(s.y))
    return s


def add_step(doc: ConstructionDocument, new: ConstructionStep) -> ConstructionDocument:
    """Append ``new`` under the next allocated id; ids are never reused."""
    allocated = doc.effective_next_id()
    placed = replace(_coerced(new), id=allocated)
    out = ConstructionDocument(steps=doc.steps + (placed,),
                               format_version=doc.format_version,
                               next_id=allocated + 1)
    return ensure_valid(out)


def append_step(doc: ConstructionDocument, placed: ConstructionStep) -> ConstructionDocument:
    """Append a step that already carries its id (replica/snapshot replay)."""
    out = replace(doc, steps=doc.steps + (_coerced(placed),),
                  next_id=max(doc.effective_next_id(), placed.id + 1))
    return ensure_valid(out)


def direct_dependents(doc: ConstructionDocument, step_id: int) -> set[int]:
    return {s.id for s in doc.steps if step_id in s.args}


def dependent_closure(doc: ConstructionDocument, step_id: int) -> set[int]:
    """All steps that transitively depend on ``step_id`` (excluding it)."""
    doomed: set[int] = set()
    for s in doc.steps:
        if s.id == step_id:
            continue
        if any(a == step_id or a in doomed for a in s.args):
            doomed.add(s.id)
    return doomed


def remove_step(doc: ConstructionDocument, step_id: int,
                cascade: bool = False) -> ConstructionDocument:
    if doc.step_by_id(step_id) is None:
        raise EditError(f"unknown step id {step_id}")
    dependents = dependent_closure(doc, step_id)
    if dependents and not cascade:
        listing = ", ".join(str(i) for i in sorted(dependents))
        raise EditError(f"step {step_id} has dependents ({listing}); remove with cascade")
    doomed = dependents | {step_id}
    out = replace(doc, steps=tuple(s for s in doc.steps if s.id not in doomed),
                  next_id=doc.effective_next_id())
    return ensure_valid(out)


def apply_drag(doc: ConstructionDocument, target: int,
               new_x: float, new_y: float) -> ConstructionDocument:
    """Move a free point; dependent objects are realized by re-evaluation."""
    s = doc.step_by_id(target)
    if s is None:
        raise EditError(f"unknown step id {target}")
    if not s.is_free_point():
        raise EditError(f"step {target} is {s.kind}; only free points are draggable")
    if not (_finite(new_x) and _finite(new_y)):
        raise EditError("drag coordinates must be finite")
    moved = replace(s, x=float(new_x), y=float(new_y))
    steps = tuple(moved if t.id == target else t for t in doc.steps)
    return replace(doc, steps=steps)


def with_free_coords(doc: ConstructionDocument,
                     coords: Mapping[int, tuple[float, float]]) -> ConstructionDocument:
    """Replace several free-point coordinates at once (sampling helper)."""
    steps = []
    for s in doc.steps:
        if s.id in coords:
            if not s.is_free_point():
                raise EditError(f"step {s.id} is not a free point")
            x, y = coords[s.id]
            steps.append(replace(s, x=float(x), y=float(y)))
        else:
            steps.append(s)
    return replace(doc, steps=tuple(steps))
