"""Randomized fixtures: seeded construction-document generation.

Used by the test suite and by the cross-component evaluation-vector
generator, so both sides exercise the same distribution of documents.
"""

from __future__ import annotations

import random

from .kernel import (
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
    add_step,
    free_point,
    result_sort,
    step,
)
from .kernel.values import SORT_CIRCLE, SORT_LINE, SORT_POINT

_DERIVED_KINDS = (
    MIDPOINT,
    LINE_THROUGH_POINTS,
    PERPENDICULAR_THROUGH,
    PARALLEL_THROUGH,
    CIRCLE_CENTER_POINT,
    INTERSECT_LINE_LINE,
    INTERSECT_LINE_CIRCLE,
    INTERSECT_CIRCLE_CIRCLE,
)


def random_document(rng: random.Random, max_steps: int = 50,
                    coord_bound: float = 50.0) -> ConstructionDocument:
    """Build a random valid document with 3..max_steps steps."""
    doc = ConstructionDocument()
    n_free = rng.randint(2, 4)
    for _ in range(n_free):
        doc = add_step(doc, free_point(rng.uniform(-coord_bound, coord_bound),
                                       rng.uniform(-coord_bound, coord_bound)))
    target = rng.randint(max(3, n_free), max_steps)
    while len(doc.steps) < target:
        by_sort = {SORT_POINT: [], SORT_LINE: [], SORT_CIRCLE: []}
        for s in doc.steps:
            by_sort[result_sort(s.kind)].append(s.id)
        kind = rng.choice(_DERIVED_KINDS + (FREE_POINT,))
        if kind == FREE_POINT:
            doc = add_step(doc, free_point(rng.uniform(-coord_bound, coord_bound),
                                           rng.uniform(-coord_bound, coord_bound)))
            continue
        sorts = {
            MIDPOINT: (SORT_POINT, SORT_POINT),
            LINE_THROUGH_POINTS: (SORT_POINT, SORT_POINT),
            PERPENDICULAR_THROUGH: (SORT_LINE, SORT_POINT),
            PARALLEL_THROUGH: (SORT_LINE, SORT_POINT),
            CIRCLE_CENTER_POINT: (SORT_POINT, SORT_POINT),
            INTERSECT_LINE_LINE: (SORT_LINE, SORT_LINE),
            INTERSECT_LINE_CIRCLE: (SORT_LINE, SORT_CIRCLE),
            INTERSECT_CIRCLE_CIRCLE: (SORT_CIRCLE, SORT_CIRCLE),
        }[kind]
        if any(not by_sort[s] for s in sorts):
            continue
        args = tuple(rng.choice(by_sort[s]) for s in sorts)
        if kind == LINE_THROUGH_POINTS and args[0] == args[1]:
            continue
        branch = rng.randint(0, 1) if kind in (INTERSECT_LINE_CIRCLE,
                                               INTERSECT_CIRCLE_CIRCLE) else None
        doc = add_step(doc, step(kind, args, branch=branch))
    return doc


def free_ids(doc: ConstructionDocument) -> list[int]:
    return [s.id for s in doc.steps if s.is_free_point()]
