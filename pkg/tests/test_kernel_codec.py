from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geolab.errors import ParseError
from geolab.kernel import (
    MIDPOINT,
    ConstructionDocument,
    canonical_serialize,
    doc_from_obj,
    doc_to_obj,
    parse,
)
from geolab.testing import random_document

from conftest import build_doc


class TestRoundTrip:
    def test_midpoint_round_trip(self, midpoint_doc):
        assert parse(canonical_serialize(midpoint_doc)) == midpoint_doc

    def test_random_documents_round_trip(self, rng):
        for _ in range(200):
            doc = random_document(rng, max_steps=40)
            assert parse(canonical_serialize(doc)) == doc

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1),
           coords=st.tuples(st.floats(allow_nan=False, allow_infinity=False,
                                      min_value=-1e4, max_value=1e4),
                            st.floats(allow_nan=False, allow_infinity=False,
                                      min_value=-1e4, max_value=1e4)))
    def test_round_trip_is_identity(self, seed, coords):
        doc = random_document(random.Random(seed), max_steps=12)
        doc = build_doc(("free", coords[0], coords[1])) if not doc.steps else doc
        assert parse(canonical_serialize(doc)) == doc

    def test_equal_docs_equal_bytes(self, midpoint_doc):
        twin = build_doc(("free", 0.0, 0.0, "A"),
                         ("free", 2.0, 0.0, "B"),
                         (MIDPOINT, (0, 1), None, "M"))
        assert twin == midpoint_doc
        assert canonical_serialize(twin) == canonical_serialize(midpoint_doc)

    def test_serialization_is_stable(self, midpoint_doc):
        assert canonical_serialize(midpoint_doc) == canonical_serialize(midpoint_doc)

    def test_shortest_round_trip_numbers(self):
        doc = build_doc(("free", 0.1, 1e-5), ("free", 12345.678901, -0.0))
        data = canonical_serialize(doc).decode()
        assert '"x":0.1' in data and '"y":1e-05' in data
        assert parse(data.encode()) == doc


class TestParseErrors:
    def test_truncated_input_reports_offset(self, midpoint_doc):
        data = canonical_serialize(midpoint_doc)[:-10]
        with pytest.raises(ParseError) as err:
            parse(data)
        assert err.value.position is not None

    def test_bad_json(self):
        with pytest.raises(ParseError) as err:
            parse(b"{nope}")
        assert err.value.position == 1

    def test_unknown_kind(self):
        with pytest.raises(ParseError) as err:
            parse(json.dumps({"format_version": 1, "steps": [
                {"id": 0, "kind": "Sphere", "args": []}]}))
        assert "steps[0]" in str(err.value)

    def test_unknown_key_rejected(self):
        with pytest.raises(ParseError):
            parse(json.dumps({"format_version": 1, "steps": [], "extra": 1}))

    def test_missing_branch(self):
        with pytest.raises(ParseError) as err:
            parse(json.dumps({"format_version": 1, "steps": [
                {"id": 0, "kind": "FreePoint", "args": [], "x": 0, "y": 0},
                {"id": 1, "kind": "FreePoint", "args": [], "x": 1, "y": 0},
                {"id": 2, "kind": "CircleCenterPoint", "args": [0, 1]},
                {"id": 3, "kind": "CircleCenterPoint", "args": [1, 0]},
                {"id": 4, "kind": "IntersectCircleCircle", "args": [2, 3]}]}))
        assert "branch" in str(err.value)

    def test_coordinates_on_derived_step_rejected(self):
        with pytest.raises(ParseError):
            parse(json.dumps({"format_version": 1, "steps": [
                {"id": 0, "kind": "FreePoint", "args": [], "x": 0, "y": 0},
                {"id": 1, "kind": "FreePoint", "args": [], "x": 1, "y": 0},
                {"id": 2, "kind": "Midpoint", "args": [0, 1], "x": 0.5}]}))

    def test_integer_coordinates_coerced_to_float(self):
        doc = parse(json.dumps({"format_version": 1, "steps": [
            {"id": 0, "kind": "FreePoint", "args": [], "x": 2, "y": 3}]}))
        assert isinstance(doc.steps[0].x, float)
        # canonical bytes use float formatting regardless of input spelling
        assert b'"x":2.0' in canonical_serialize(doc)


class TestObjForms:
    def test_obj_round_trip(self, lens_doc):
        assert doc_from_obj(doc_to_obj(lens_doc)) == lens_doc

    def test_doc_from_obj_type_errors(self):
        with pytest.raises(ParseError):
            doc_from_obj([1, 2, 3])
        with pytest.raises(ParseError):
            doc_from_obj({"format_version": "1", "steps": []})
