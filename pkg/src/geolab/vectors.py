"""Cross-component evaluation vectors.

Emits a JSON file of documents with their canonical bytes and expected
evaluations, plus float-formatting pairs, so an independent client-side
kernel can prove parity against this one. Run:

    python3 -m geolab.vectors --out frontend/test-vectors/kernel_vectors.json
"""

from __future__ import annotations

import argparse
import json
import math
import random
import struct
from pathlib import Path

from .kernel import (
    Circle,
    Line,
    Point,
    Undefined,
    canonical_serialize,
    doc_to_obj,
    evaluate,
)
from .testing import random_document

INTERESTING_FLOATS = [
    0.0, -0.0, 1.0, 2.0, -2.0, 0.5, 0.1, 1e-4, 1e-5, 9.999e-5, 1e15, 1e16,
    1.5e300, 5e-324, 1234567890123456.8, 0.30000000000000004, 2.5e-10,
    -9999.123456789012, 1e4, 3.141592653589793, 1.7976931348623157e308,
    6.02e23, -1e-9,
]


def value_to_obj(value):
    if isinstance(value, Point):
        return {"type": "point", "x": value.x, "y": value.y}
    if isinstance(value, Line):
        return {"type": "line", "a": value.a, "b": value.b, "c": value.c}
    if isinstance(value, Circle):
        return {"type": "circle", "cx": value.cx, "cy": value.cy, "r": value.r}
    assert isinstance(value, Undefined)
    return {"type": "undefined", "reason": value.reason}


def handcrafted_docs():
    from .kernel import (
        CIRCLE_CENTER_POINT,
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
        step,
    )

    def build(*specs):
        doc = ConstructionDocument()
        for item in specs:
            if item[0] == "free":
                doc = add_step(doc, free_point(item[1], item[2],
                                               item[3] if len(item) > 3 else None))
            else:
                doc = add_step(doc, step(item[0], item[1],
                                         branch=item[2] if len(item) > 2 else None,
                                         label=item[3] if len(item) > 3 else None))
        return doc

    yield build(("free", 0.0, 0.0, "A"), ("free", 2.0, 0.0, "B"),
                (MIDPOINT, (0, 1), None, "M"))
    yield build(("free", 0.0, 0.0), ("free", 1.0, 0.0),
                (CIRCLE_CENTER_POINT, (0, 1)),
                (CIRCLE_CENTER_POINT, (1, 0)),
                (INTERSECT_CIRCLE_CIRCLE, (2, 3), 0),
                (INTERSECT_CIRCLE_CIRCLE, (2, 3), 1))
    yield build(("free", 0.0, 0.0), ("free", 1.0, 0.0), ("free", 0.0, 1.0),
                ("free", 1.0, 1.0),
                (LINE_THROUGH_POINTS, (0, 1)),
                (LINE_THROUGH_POINTS, (2, 3)),
                (INTERSECT_LINE_LINE, (4, 5)))
    yield build(("free", 3.0, 3.0), ("free", 3.0, 3.0),
                (LINE_THROUGH_POINTS, (0, 1)),
                ("free", 1.0, -1.0),
                (PERPENDICULAR_THROUGH, (2, 3)))
    yield build(("free", -5.0, 1.0), ("free", 5.0, 1.0),
                ("free", 0.0, 0.0), ("free", 3.0, 0.0),
                (LINE_THROUGH_POINTS, (0, 1), None, "l"),
                (CIRCLE_CENTER_POINT, (2, 3), None, "c"),
                (INTERSECT_LINE_CIRCLE, (4, 5), 0),
                (INTERSECT_LINE_CIRCLE, (4, 5), 1))
    # tangency is degenerate by the epsilon rule
    yield build(("free", -5.0, 3.0), ("free", 5.0, 3.0),
                ("free", 0.0, 0.0), ("free", 3.0, 0.0),
                (LINE_THROUGH_POINTS, (0, 1)),
                (CIRCLE_CENTER_POINT, (2, 3)),
                (INTERSECT_LINE_CIRCLE, (4, 5), 0))
    yield build(("free", 0.0, 0.0), ("free", 4.0, 1.0), ("free", -2.0, 5.0),
                (LINE_THROUGH_POINTS, (0, 1)),
                (PERPENDICULAR_THROUGH, (3, 2)),
                (PARALLEL_THROUGH, (3, 2)),
                (INTERSECT_LINE_LINE, (3, 4)))
    yield build(("free", 1e4, -1e4), ("free", -1e4, 1e4),
                ("free", 1e-4, 2.5e-5),
                (MIDPOINT, (0, 1)), (LINE_THROUGH_POINTS, (0, 1)),
                (CIRCLE_CENTER_POINT, (2, 0)))


def build_vectors(seed: int = 20130, random_docs: int = 60) -> dict:
    rng = random.Random(seed)
    docs = list(handcrafted_docs())
    for _ in range(random_docs):
        docs.append(random_document(rng, max_steps=30))
    vectors = []
    for doc in docs:
        ev = evaluate(doc)
        vectors.append({
            "doc": doc_to_obj(doc),
            "canonical": canonical_serialize(doc).decode("utf-8"),
            "expected": {str(i): value_to_obj(ev.value(i)) for i in doc.ids()},
        })

    floats = list(INTERESTING_FLOATS)
    frng = random.Random(seed + 1)
    for _ in range(400):
        bits = frng.getrandbits(64)
        value = struct.unpack("<d", struct.pack("<Q", bits))[0]
        if math.isfinite(value):
            floats.append(value)
    for _ in range(200):
        floats.append(frng.uniform(-1e4, 1e4))
    float_repr = [[v, repr(v)] for v in floats]

    return {"format_version": 1, "epsilon": 1e-9,
            "float_repr": float_repr, "vectors": vectors}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=20130)
    args = parser.parse_args(argv)
    payload = build_vectors(seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload), encoding="utf-8")
    print(f"wrote {len(payload['vectors'])} vectors, "
          f"{len(payload['float_repr'])} float pairs to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
