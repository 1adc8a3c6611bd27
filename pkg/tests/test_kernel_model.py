from __future__ import annotations

import random

import pytest

from geolab.errors import EditError, InvalidDocument
from geolab.kernel import (
    LINE_THROUGH_POINTS,
    MIDPOINT,
    ConstructionDocument,
    ConstructionStep,
    add_step,
    append_step,
    apply_drag,
    dependent_closure,
    evaluate,
    free_point,
    remove_step,
    step,
    validate,
)
from geolab.testing import random_document

from conftest import build_doc


def codes(violations):
    return {v.code for v in violations}


class TestValidate:
    def test_well_formed(self, midpoint_doc):
        assert validate(midpoint_doc) == []

    def test_forward_reference_only_step(self):
        doc = ConstructionDocument(steps=(ConstructionStep(0, MIDPOINT, (0, 1)),))
        assert codes(validate(doc)) == {"forward-ref"}

    def test_unknown_reference(self):
        doc = ConstructionDocument(steps=(
            ConstructionStep(0, "FreePoint", x=0.0, y=0.0),
            ConstructionStep(5, MIDPOINT, (0, 3)),
        ))
        assert codes(validate(doc)) == {"unknown-ref"}

    def test_sort_mismatch(self):
        doc = build_doc(("free", 0, 0, "A"), ("free", 1, 1, "B"),
                        (LINE_THROUGH_POINTS, (0, 1)))
        bad = ConstructionDocument(steps=doc.steps + (
            ConstructionStep(3, MIDPOINT, (2, 0)),))
        out = validate(bad)
        assert [v.step_id for v in out] == [3]
        assert codes(out) == {"sort-mismatch"}

    def test_duplicate_labels(self):
        doc = ConstructionDocument(steps=(
            ConstructionStep(0, "FreePoint", x=0.0, y=0.0, label="A"),
            ConstructionStep(1, "FreePoint", x=1.0, y=0.0, label="A"),
        ))
        assert codes(validate(doc)) == {"dup-label"}

    def test_non_monotone_ids(self):
        doc = ConstructionDocument(steps=(
            ConstructionStep(3, "FreePoint", x=0.0, y=0.0),
            ConstructionStep(3, "FreePoint", x=1.0, y=0.0),
        ))
        assert "id-order" in codes(validate(doc))

    def test_branch_rules(self):
        doc = build_doc(("free", 0, 0), ("free", 1, 1))
        with_branch = ConstructionDocument(steps=doc.steps + (
            ConstructionStep(2, MIDPOINT, (0, 1), branch=0),))
        assert "branch" in codes(validate(with_branch))

    def test_nonfinite_coords(self):
        doc = ConstructionDocument(steps=(
            ConstructionStep(0, "FreePoint", x=float("nan"), y=0.0),))
        assert codes(validate(doc)) == {"coords"}

    def test_random_mutation_rejected(self, rng):
        # shuffling a valid document's step order must trip id-order/refs
        for seed in range(30):
            r = random.Random(seed)
            doc = random_document(r, max_steps=12)
            steps = list(doc.steps)
            if len(steps) < 2:
                continue
            r.shuffle(steps)
            mutated = ConstructionDocument(steps=tuple(steps))
            if tuple(s.id for s in steps) == doc.ids():
                continue
            assert validate(mutated) != []


class TestEditing:
    def test_add_allocates_next_id(self, midpoint_doc):
        doc = add_step(midpoint_doc, free_point(5, 5))
        assert doc.steps[-1].id == 3
        assert doc.effective_next_id() == 4

    def test_removed_ids_never_reused(self, midpoint_doc):
        doc = remove_step(midpoint_doc, 2)
        doc = add_step(doc, free_point(9, 9))
        assert doc.steps[-1].id == 3  # id 2 stays retired

    def test_remove_with_dependents_fails(self, midpoint_doc):
        with pytest.raises(EditError) as err:
            remove_step(midpoint_doc, 0, cascade=False)
        assert "2" in str(err.value)

    def test_remove_leaf(self, midpoint_doc):
        doc = remove_step(midpoint_doc, 2)
        assert doc.ids() == (0, 1)

    def test_remove_cascade(self, midpoint_doc):
        doc = remove_step(midpoint_doc, 0, cascade=True)
        assert doc.ids() == (1,)

    def test_dependent_closure(self, triangle_doc):
        assert dependent_closure(triangle_doc, 0) == {3, 4}
        assert dependent_closure(triangle_doc, 1) == {3}

    def test_drag_moves_midpoint(self, midpoint_doc):
        doc = apply_drag(midpoint_doc, 1, 4.0, 0.0)
        ev = evaluate(doc)
        assert (ev.value(2).x, ev.value(2).y) == (2.0, 0.0)

    def test_drag_rejects_derived_step(self, midpoint_doc):
        with pytest.raises(EditError):
            apply_drag(midpoint_doc, 2, 1.0, 1.0)

    def test_drag_rejects_unknown(self, midpoint_doc):
        with pytest.raises(EditError):
            apply_drag(midpoint_doc, 99, 1.0, 1.0)

    def test_drag_rejects_nonfinite(self, midpoint_doc):
        with pytest.raises(EditError):
            apply_drag(midpoint_doc, 0, float("inf"), 0.0)

    def test_add_invalid_step_rejected(self, midpoint_doc):
        with pytest.raises(InvalidDocument):
            add_step(midpoint_doc, step(MIDPOINT, (0, 99)))

    def test_append_step_keeps_given_id(self, midpoint_doc):
        doc = append_step(midpoint_doc, free_point(1, 1, step_id=7))
        assert doc.steps[-1].id == 7
        assert doc.effective_next_id() == 8

    def test_documents_are_values(self, midpoint_doc):
        before = midpoint_doc.steps
        apply_drag(midpoint_doc, 0, 9.0, 9.0)
        assert midpoint_doc.steps == before
