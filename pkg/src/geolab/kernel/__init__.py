"""Dynamic-geometry kernel: documents, evaluation, editing, canonical codec."""

from .codec import canonical_serialize, doc_from_obj, doc_to_obj, parse, step_from_obj, step_to_obj
from .evaluate import Evaluation, evaluate
from .model import (
    CIRCLE_CENTER_POINT,
    FREE_POINT,
    INTERSECT_CIRCLE_CIRCLE,
    INTERSECT_LINE_CIRCLE,
    INTERSECT_LINE_LINE,
    LINE_THROUGH_POINTS,
    MAX_LABEL_LENGTH,
    MIDPOINT,
    PARALLEL_THROUGH,
    PERPENDICULAR_THROUGH,
    SIGNATURES,
    ConstructionDocument,
    ConstructionStep,
    Violation,
    add_step,
    append_step,
    apply_drag,
    dependent_closure,
    direct_dependents,
    ensure_valid,
    free_point,
    remove_step,
    result_sort,
    step,
    validate,
    with_free_coords,
)
from .values import (
    EPSILON,
    Circle,
    GeometricValue,
    Line,
    Point,
    Undefined,
    sort_of,
)

__all__ = [
    "CIRCLE_CENTER_POINT", "FREE_POINT", "INTERSECT_CIRCLE_CIRCLE",
    "INTERSECT_LINE_CIRCLE", "INTERSECT_LINE_LINE", "LINE_THROUGH_POINTS",
    "MAX_LABEL_LENGTH", "MIDPOINT", "PARALLEL_THROUGH", "PERPENDICULAR_THROUGH",
    "SIGNATURES", "EPSILON",
    "ConstructionDocument", "ConstructionStep", "Violation", "Evaluation",
    "Circle", "GeometricValue", "Line", "Point", "Undefined",
    "add_step", "append_step", "apply_drag", "canonical_serialize",
    "dependent_closure", "direct_dependents", "doc_from_obj", "doc_to_obj",
    "ensure_valid", "evaluate", "free_point", "parse", "remove_step",
    "result_sort", "sort_of", "step", "step_from_obj", "step_to_obj",
    "validate", "with_free_coords",
]
