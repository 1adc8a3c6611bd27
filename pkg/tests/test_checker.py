from __future__ import annotations

import math
import random

import pytest

from geolab.checker import (
    COLLINEAR,
    CONCYCLIC,
    EQUIDISTANT,
    ON_OBJECT,
    PARALLEL,
    PERPENDICULAR,
    Degenerate,
    Fails,
    Holds,
    PropertyError,
    PropertySpec,
    check_property,
    residual,
    resolve_property,
)
from geolab.kernel import (
    CIRCLE_CENTER_POINT,
    LINE_THROUGH_POINTS,
    PARALLEL_THROUGH,
    PERPENDICULAR_THROUGH,
    evaluate,
    with_free_coords,
)

from conftest import build_doc


def three_free_points():
    return build_doc(("free", 0, 0, "A"), ("free", 1, 0, "B"), ("free", 0, 1, "C"))


class TestVerdicts:
    def test_midpoint_collinear_holds(self, midpoint_doc):
        verdict = check_property(midpoint_doc, PropertySpec(COLLINEAR, (0, 2, 1)),
                                 trials=200, seed=7)
        assert verdict == Holds(samples=200)

    def test_midpoint_equidistant_holds(self, midpoint_doc):
        verdict = check_property(midpoint_doc, PropertySpec(EQUIDISTANT, (2, 0, 1)),
                                 trials=200, seed=7)
        assert verdict == Holds(samples=200)

    def test_independent_points_fail_with_witness(self):
        # random-sampling oracle: three uniform points are collinear with
        # probability zero, so some early sample must exceed the tolerance
        doc = three_free_points()
        verdict = check_property(doc, PropertySpec(COLLINEAR, (0, 1, 2)),
                                 trials=200, seed=11)
        assert isinstance(verdict, Fails)
        ev = evaluate(with_free_coords(doc, verdict.witness))
        again = residual(PropertySpec(COLLINEAR, (0, 1, 2)), ev)
        assert math.isclose(again, verdict.residual, rel_tol=1e-12)
        assert again > 1e-6

    def test_degenerate_when_mostly_undefined(self):
        # intersection of two lines through the SAME pair of points is
        # always degenerate: every sample is Undefined
        doc = build_doc(("free", 0, 0), ("free", 1, 1),
                        (LINE_THROUGH_POINTS, (0, 1)),
                        (LINE_THROUGH_POINTS, (0, 1)),
                        ("IntersectLineLine", (2, 3)))
        verdict = check_property(doc, PropertySpec(ON_OBJECT, (4, 2)),
                                 trials=40, seed=3)
        assert isinstance(verdict, Degenerate)
        assert verdict.fraction_undefined == 1.0

    def test_same_seed_same_verdict(self):
        doc = three_free_points()
        prop = PropertySpec(COLLINEAR, (0, 1, 2))
        a = check_property(doc, prop, trials=50, seed=99)
        b = check_property(doc, prop, trials=50, seed=99)
        assert a == b

    def test_different_seed_different_witness(self):
        doc = three_free_points()
        prop = PropertySpec(COLLINEAR, (0, 1, 2))
        a = check_property(doc, prop, trials=50, seed=1)
        b = check_property(doc, prop, trials=50, seed=2)
        assert isinstance(a, Fails) and isinstance(b, Fails)
        assert a.witness != b.witness


class TestPropertyFamilies:
    def test_perpendicular_and_parallel_hold_for_all_seeds(self):
        doc = build_doc(("free", 0, 0), ("free", 4, 1), ("free", 2, 5),
                        (LINE_THROUGH_POINTS, (0, 1), None, "base"),
                        (PERPENDICULAR_THROUGH, (3, 2), None, "perp"),
                        (PARALLEL_THROUGH, (3, 2), None, "para"))
        for seed in range(25):
            assert isinstance(check_property(
                doc, PropertySpec(PERPENDICULAR, (3, 4)), 40, seed), Holds)
            assert isinstance(check_property(
                doc, PropertySpec(PARALLEL, (3, 5)), 40, seed), Holds)

    def test_circle_point_on_object(self):
        doc = build_doc(("free", 0, 0), ("free", 3, 0),
                        (CIRCLE_CENTER_POINT, (0, 1)),
                        (LINE_THROUGH_POINTS, (0, 1)),
                        ("IntersectLineCircle", (3, 2), 0))
        verdict = check_property(doc, PropertySpec(ON_OBJECT, (4, 2)), 100, 5)
        assert isinstance(verdict, Holds)

    def test_concyclic_on_constructed_circle(self):
        # two intersection points of a line with a circle plus the two
        # diametral rim points are concyclic
        doc = build_doc(("free", 0, 0), ("free", 3, 0), ("free", -1, 1), ("free", 1, -2),
                        (CIRCLE_CENTER_POINT, (0, 1)),
                        (LINE_THROUGH_POINTS, (2, 3)),
                        ("IntersectLineCircle", (5, 4), 0),
                        ("IntersectLineCircle", (5, 4), 1),
                        (LINE_THROUGH_POINTS, (0, 1)),
                        ("IntersectLineCircle", (8, 4), 0),
                        ("IntersectLineCircle", (8, 4), 1))
        verdict = check_property(doc, PropertySpec(CONCYCLIC, (6, 7, 9, 10)), 100, 17)
        assert isinstance(verdict, (Holds, Degenerate))
        if isinstance(verdict, Holds):
            assert verdict.samples > 0

    def test_noncollinear_fails_are_reproducible_for_many_seeds(self):
        doc = three_free_points()
        prop = PropertySpec(COLLINEAR, (0, 1, 2))
        for seed in range(30):
            verdict = check_property(doc, prop, 50, seed)
            assert isinstance(verdict, Fails)
            ev = evaluate(with_free_coords(doc, verdict.witness))
            assert residual(prop, ev) > 1e-6


class TestErrors:
    def test_unknown_id(self, midpoint_doc):
        with pytest.raises(PropertyError):
            check_property(midpoint_doc, PropertySpec(COLLINEAR, (0, 1, 9)), 10, 0)

    def test_sort_mismatch(self, triangle_doc):
        with pytest.raises(PropertyError):
            check_property(triangle_doc, PropertySpec(COLLINEAR, (0, 1, 3)), 10, 0)

    def test_bad_kind(self, midpoint_doc):
        with pytest.raises(PropertyError):
            check_property(midpoint_doc, PropertySpec("tangent", (0,)), 10, 0)

    def test_trials_must_be_positive(self, midpoint_doc):
        with pytest.raises(PropertyError):
            check_property(midpoint_doc, PropertySpec(COLLINEAR, (0, 2, 1)), 0, 0)

    def test_on_object_needs_object(self, midpoint_doc):
        with pytest.raises(PropertyError):
            check_property(midpoint_doc, PropertySpec(ON_OBJECT, (0, 1)), 10, 0)


class TestResolve:
    def test_labels(self, midpoint_doc):
        prop = resolve_property(midpoint_doc, "Equidistant", ["M", "A", "B"])
        assert prop == PropertySpec(EQUIDISTANT, (2, 0, 1))

    def test_numeric_ids(self, midpoint_doc):
        prop = resolve_property(midpoint_doc, "collinear", ["0", "2", "1"])
        assert prop.args == (0, 2, 1)

    def test_unknown_label(self, midpoint_doc):
        with pytest.raises(PropertyError):
            resolve_property(midpoint_doc, "collinear", ["A", "Z", "B"])
