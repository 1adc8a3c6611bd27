from __future__ import annotations

import random

import pytest

from geolab.kernel import (
    CIRCLE_CENTER_POINT,
    INTERSECT_CIRCLE_CIRCLE,
    LINE_THROUGH_POINTS,
    MIDPOINT,
    ConstructionDocument,
    add_step,
    free_point,
    step,
)


def build_doc(*specs) -> ConstructionDocument:
    """specs: ('free', x, y, label?) or (kind, args, branch?, label?)."""
    doc = ConstructionDocument()
    for item in specs:
        if item[0] == "free":
            label = item[3] if len(item) > 3 else None
            doc = add_step(doc, free_point(item[1], item[2], label))
        else:
            kind, args = item[0], item[1]
            branch = item[2] if len(item) > 2 else None
            label = item[3] if len(item) > 3 else None
            doc = add_step(doc, step(kind, args, branch=branch, label=label))
    return doc


@pytest.fixture
def midpoint_doc() -> ConstructionDocument:
    return build_doc(("free", 0.0, 0.0, "A"),
                     ("free", 2.0, 0.0, "B"),
                     (MIDPOINT, (0, 1), None, "M"))


@pytest.fixture
def triangle_doc() -> ConstructionDocument:
    return build_doc(("free", 0.0, 0.0, "A"),
                     ("free", 4.0, 0.0, "B"),
                     ("free", 1.0, 3.0, "C"),
                     (LINE_THROUGH_POINTS, (0, 1), None, "AB"),
                     (LINE_THROUGH_POINTS, (0, 2), None, "AC"))


@pytest.fixture
def lens_doc() -> ConstructionDocument:
    return build_doc(("free", 0.0, 0.0, "O1"),
                     ("free", 1.0, 0.0, "O2"),
                     (CIRCLE_CENTER_POINT, (0, 1), None, "c1"),
                     (CIRCLE_CENTER_POINT, (1, 0), None, "c2"),
                     (INTERSECT_CIRCLE_CIRCLE, (2, 3), 0, "P"),
                     (INTERSECT_CIRCLE_CIRCLE, (2, 3), 1, "Q"))


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
