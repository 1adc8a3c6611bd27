"""Canonical construction-file encoding.

The on-disk and on-wire form of a document is a single JSON record with
fixed key order and shortest round-trip number formatting, so structurally
equal documents always serialize to identical bytes:

    {"format_version": 1,
     "steps": [{"id": 0, "kind": "FreePoint", "args": [], "x": 0.0, "y": 0.0,
                "label": "A"}, ...]}

Per step the keys appear in the order id, kind, args, x, y, branch, label;
``x``/``y`` only for free points, ``branch`` only for branched intersection
kinds, ``label`` only when present.
"""

from __future__ import annotations

import json
from typing import Any

from ..errors import ParseError
from .model import (
    FREE_POINT,
    SIGNATURES,
    ConstructionDocument,
    ConstructionStep,
    ensure_valid,
)

_TOP_KEYS = {"format_version", "steps"}
_STEP_KEYS = {"id", "kind", "args", "x", "y", "branch", "label"}


def step_to_obj(s: ConstructionStep) -> dict[str, Any]:
    obj: dict[str, Any] = {"id": s.id, "kind": s.kind, "args": list(s.args)}
    if s.kind == FREE_POINT:
        obj["x"] = float(s.x)
        obj["y"] = float(s.y)
    if s.branch is not None:
        obj["branch"] = s.branch
    if s.label is not None:
        obj["label"] = s.label
    return obj


def doc_to_obj(doc: ConstructionDocument) -> dict[str, Any]:
    return {"format_version": doc.format_version,
            "steps": [step_to_obj(s) for s in doc.steps]}


def canonical_serialize(doc: ConstructionDocument) -> bytes:
    """Canonical bytes of a valid document; equal documents yield equal bytes."""
    ensure_valid(doc)
    return json.dumps(doc_to_obj(doc), separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _fail(path: str, reason: str) -> ParseError:
    return ParseError(f"{path}: {reason}")


def _expect_int(obj: Any, path: str) -> int:
    if not isinstance(obj, int) or isinstance(obj, bool):
        raise _fail(path, "expected an integer")
    return obj


def step_from_obj(obj: Any, path: str = "step") -> ConstructionStep:
    if not isinstance(obj, dict):
        raise _fail(path, "expected an object")
    unknown = set(obj) - _STEP_KEYS
    if unknown:
        raise _fail(path, f"unknown key {sorted(unknown)[0]!r}")
    for key in ("id", "kind", "args"):
        if key not in obj:
            raise _fail(path, f"missing key {key!r}")
    step_id = _expect_int(obj["id"], f"{path}.id")
    kind = obj["kind"]
    if not isinstance(kind, str) or kind not in SIGNATURES:
        raise _fail(f"{path}.kind", f"unknown step kind {kind!r}")
    raw_args = obj["args"]
    if not isinstance(raw_args, list):
        raise _fail(f"{path}.args", "expected an array of step ids")
    args = tuple(_expect_int(a, f"{path}.args[{i}]") for i, a in enumerate(raw_args))

    sig = SIGNATURES[kind]
    x = y = None
    if kind == FREE_POINT:
        for key in ("x", "y"):
            if key not in obj:
                raise _fail(path, f"FreePoint requires {key!r}")
            if isinstance(obj[key], bool) or not isinstance(obj[key], (int, float)):
                raise _fail(f"{path}.{key}", "expected a number")
        x, y = float(obj["x"]), float(obj["y"])
    elif "x" in obj or "y" in obj:
        raise _fail(path, f"{kind} does not carry coordinates")

    branch = None
    if sig.branched:
        if "branch" not in obj:
            raise _fail(path, f"{kind} requires 'branch'")
        branch = obj["branch"]
        if branch not in (0, 1) or isinstance(branch, bool):
            raise _fail(f"{path}.branch", "expected 0 or 1")
    elif "branch" in obj:
        raise _fail(path, f"{kind} does not take a branch")

    label = obj.get("label")
    if label is not None and not isinstance(label, str):
        raise _fail(f"{path}.label", "expected a string")
    return ConstructionStep(id=step_id, kind=kind, args=args, x=x, y=y,
                            branch=branch, label=label)


def doc_from_obj(obj: Any, path: str = "document") -> ConstructionDocument:
    """Structural decoding; document-level validity is checked by validate()."""
    if not isinstance(obj, dict):
        raise _fail(path, "expected a top-level object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise _fail(path, f"unknown key {sorted(unknown)[0]!r}")
    for key in _TOP_KEYS:
        if key not in obj:
            raise _fail(path, f"missing key {key!r}")
    version = _expect_int(obj["format_version"], f"{path}.format_version")
    raw_steps = obj["steps"]
    if not isinstance(raw_steps, list):
        raise _fail(f"{path}.steps", "expected an array")
    steps = tuple(step_from_obj(s, f"{path}.steps[{i}]") for i, s in enumerate(raw_steps))
    return ConstructionDocument(steps=steps, format_version=version)


def parse(data: bytes | str) -> ConstructionDocument:
    """Decode canonical bytes; reports position and reason on malformed input."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"invalid UTF-8: {exc.reason}", position=exc.start) from exc
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, position=exc.pos) from exc
    return doc_from_obj(obj)
