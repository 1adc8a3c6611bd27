from __future__ import annotations

import json
import random

import pytest

from geolab.access import (
    Group,
    Identity,
    User,
    format_permissions,
    parse_permissions,
)
from geolab.errors import AccessDenied, AuthError, Conflict, NotFound
from geolab.kernel import canonical_serialize
from geolab.store import ActivityRecord, Store
from geolab.testing import random_document

from conftest import build_doc


@pytest.fixture
def store(tmp_path):
    return Store(tmp_path / "data")


@pytest.fixture
def identity(store):
    return Identity(store, hash_iterations=500)


@pytest.fixture
def admin(store):
    user = User(user_id="u_admin", username="admin", password_digest=None,
                role="admin")
    store.put_user(user)
    return user


@pytest.fixture
def teacher(identity, admin):
    return identity.create_user(admin, "teach", "pw-teach", "teacher")


@pytest.fixture
def student(identity, teacher):
    return identity.create_user(teacher, "stud", "pw-stud", "student")


class TestIdentityService:
    def test_admin_creates_teacher(self, teacher):
        assert teacher.role == "teacher"

    def test_teacher_creates_student(self, student, teacher):
        assert student.role == "student"
        assert student.created_by == teacher.user_id

    def test_student_creates_nobody(self, identity, student):
        with pytest.raises(AccessDenied):
            identity.create_user(student, "x", "x", "student")
        with pytest.raises(AccessDenied):
            identity.create_user(student, "x", "x", "teacher")

    def test_role_lattice_exact(self, identity, admin, teacher, student):
        cases = {("admin", "teacher"): True, ("admin", "student"): False,
                 ("admin", "admin"): False, ("teacher", "student"): True,
                 ("teacher", "teacher"): False, ("teacher", "admin"): False,
                 ("student", "student"): False, ("student", "teacher"): False,
                 ("student", "admin"): False}
        actors = {"admin": admin, "teacher": teacher, "student": student}
        n = 0
        for (actor_role, new_role), allowed in cases.items():
            n += 1
            if allowed:
                identity.create_user(actors[actor_role], f"u{n}", "pw", new_role)
            else:
                with pytest.raises(AccessDenied):
                    identity.create_user(actors[actor_role], f"u{n}", "pw", new_role)

    def test_duplicate_username(self, identity, admin, teacher):
        with pytest.raises(Conflict):
            identity.create_user(admin, "teach", "pw", "teacher")

    def test_authenticate_and_resolve(self, identity, teacher):
        token, user = identity.authenticate("teach", "pw-teach")
        assert user.user_id == teacher.user_id
        assert identity.resolve(token).user_id == teacher.user_id

    def test_bad_password_uniform_failure(self, identity, teacher):
        with pytest.raises(AuthError) as unknown_user:
            identity.authenticate("nobody", "pw")
        with pytest.raises(AuthError) as bad_pw:
            identity.authenticate("teach", "wrong")
        assert str(unknown_user.value) == str(bad_pw.value)

    def test_token_expiry(self, store, teacher):
        now = [0.0]
        ident = Identity(store, token_ttl_seconds=10, hash_iterations=500,
                         clock=lambda: now[0])
        store.put_user(teacher)
        token, _ = ident.authenticate("teach", "pw-teach")
        ident.resolve(token)
        now[0] = 11.0
        with pytest.raises(AuthError):
            ident.resolve(token)


class TestGroups:
    def test_create_adds_implicit_owner(self, identity, teacher, student):
        group = identity.create_group(teacher, "class-7A")
        group = identity.set_membership(teacher, group.group_id,
                                        [student.user_id])
        assert group.effective_members() == {teacher.user_id, student.user_id}

    def test_only_owner_modifies(self, identity, admin, teacher, student):
        other = identity.create_user(admin, "teach2", "pw", "teacher")
        group = identity.create_group(teacher, "class")
        with pytest.raises(AccessDenied):
            identity.set_membership(other, group.group_id, [student.user_id])
        with pytest.raises(AccessDenied):
            identity.delete_group(other, group.group_id)

    def test_students_cannot_create_groups(self, identity, student):
        with pytest.raises(AccessDenied):
            identity.create_group(student, "club")

    def test_delete_detaches_constructions(self, store, identity, teacher, student):
        group = identity.create_group(teacher, "class")
        stored = store.save_construction(student.user_id, "tri", build_doc(("free", 0, 0)))
        identity.attach_group(student, stored.meta.construction_id, group.group_id)
        assert group.group_id in store.get_meta(stored.meta.construction_id).attached_groups
        identity.delete_group(teacher, group.group_id)
        meta = store.get_meta(stored.meta.construction_id)
        assert meta is not None and meta.attached_groups == set()
        assert meta.owner == student.user_id


class TestScrapbook:
    def test_save_then_load_identity(self, store, student, midpoint_doc):
        stored = store.save_construction(student.user_id, "mid", midpoint_doc)
        assert stored.revision == 1
        assert format_permissions(stored.meta.permissions) == "rwvr-v---"
        loaded = store.load_construction(student.user_id,
                                         stored.meta.construction_id)
        assert loaded.doc == midpoint_doc
        assert loaded.revision == 1

    def test_update_bumps_revision(self, store, student, midpoint_doc):
        stored = store.save_construction(student.user_id, "mid", midpoint_doc)
        doc2 = build_doc(("free", 1, 1))
        updated = store.update_construction(student.user_id,
                                            stored.meta.construction_id,
                                            doc2, expected_revision=1)
        assert updated.revision == 2

    def test_stale_revision_conflict(self, store, student, midpoint_doc):
        stored = store.save_construction(student.user_id, "mid", midpoint_doc)
        store.update_construction(student.user_id, stored.meta.construction_id,
                                  midpoint_doc, expected_revision=1)
        with pytest.raises(Conflict) as err:
            store.update_construction(student.user_id,
                                      stored.meta.construction_id,
                                      midpoint_doc, expected_revision=1)
        assert err.value.current_revision == 2

    def test_group_member_cannot_write_by_default(self, store, identity,
                                                  teacher, student, midpoint_doc):
        mate = identity.create_user(teacher, "mate", "pw", "student")
        group = identity.create_group(teacher, "class")
        identity.set_membership(teacher, group.group_id,
                                [student.user_id, mate.user_id])
        stored = store.save_construction(student.user_id, "mid", midpoint_doc)
        identity.attach_group(student, stored.meta.construction_id, group.group_id)
        loaded = store.load_construction(mate.user_id, stored.meta.construction_id)
        assert loaded.doc == midpoint_doc
        with pytest.raises(AccessDenied):
            store.update_construction(mate.user_id, stored.meta.construction_id,
                                      midpoint_doc, expected_revision=1)

    def test_unrelated_user_denied(self, store, identity, teacher, student,
                                   midpoint_doc):
        outsider = identity.create_user(teacher, "out", "pw", "student")
        stored = store.save_construction(student.user_id, "mid", midpoint_doc)
        with pytest.raises(AccessDenied):
            store.load_construction(outsider.user_id, stored.meta.construction_id)

    def test_teacher_of_owner_loads_via_override(self, store, identity,
                                                 teacher, student, midpoint_doc):
        group = identity.create_group(teacher, "class")
        identity.set_membership(teacher, group.group_id, [student.user_id])
        stored = store.save_construction(student.user_id, "mid", midpoint_doc)
        loaded = store.load_construction(teacher.user_id,
                                         stored.meta.construction_id)
        assert loaded.doc == midpoint_doc

    def test_owner_delete_only(self, store, identity, teacher, student,
                               midpoint_doc):
        stored = store.save_construction(student.user_id, "mid", midpoint_doc)
        with pytest.raises(AccessDenied):
            store.delete_construction(teacher.user_id,
                                      stored.meta.construction_id)
        store.delete_construction(student.user_id, stored.meta.construction_id)
        with pytest.raises(NotFound):
            store.load_construction(student.user_id,
                                    stored.meta.construction_id)

    def test_listing_sections_and_visibility(self, store, identity, teacher,
                                             student, midpoint_doc):
        mate = identity.create_user(teacher, "mate", "pw", "student")
        group = identity.create_group(teacher, "class")
        identity.set_membership(teacher, group.group_id,
                                [student.user_id, mate.user_id])
        assert store.list_visible(mate.user_id) == []
        mine = store.save_construction(mate.user_id, "own", midpoint_doc)
        shared = store.save_construction(student.user_id, "shared", midpoint_doc)
        identity.attach_group(student, shared.meta.construction_id, group.group_id)
        listing = store.list_visible(mate.user_id)
        assert [m.construction_id for m in listing] == \
            [mine.meta.construction_id, shared.meta.construction_id]

    def test_read_without_visible_unlisted_but_loadable(self, store, identity,
                                                        teacher, student,
                                                        midpoint_doc):
        outsider = identity.create_user(teacher, "out", "pw", "student")
        stored = store.save_construction(student.user_id, "mid", midpoint_doc)
        identity.set_permissions(student, stored.meta.construction_id,
                                 parse_permissions("rwvr-vr--"))
        assert stored.meta.construction_id not in [
            m.construction_id for m in store.list_visible(outsider.user_id)]
        loaded = store.load_construction(outsider.user_id,
                                         stored.meta.construction_id)
        assert loaded.doc == midpoint_doc

    def test_round_trip_many_random_documents(self, store, student, rng):
        for i in range(100):
            doc = random_document(rng, max_steps=25)
            stored = store.save_construction(student.user_id, f"doc{i}", doc)
            loaded = store.load_construction(student.user_id,
                                             stored.meta.construction_id)
            assert canonical_serialize(loaded.doc) == canonical_serialize(doc)


class TestReopen:
    def test_state_survives_reopen(self, tmp_path, midpoint_doc):
        store = Store(tmp_path / "d")
        store.put_user(User("u_admin", "admin", None, "admin"))
        ident = Identity(store, hash_iterations=500)
        teacher = ident.create_user(store.get_user("u_admin"), "t", "pw", "teacher")
        group = ident.create_group(teacher, "class")
        stored = store.save_construction(teacher.user_id, "mid", midpoint_doc)
        n_records = store.activity_count()

        again = Store(tmp_path / "d")
        assert again.get_user(teacher.user_id).username == "t"
        assert again.get_group(group.group_id).owner == teacher.user_id
        back = again.load_construction(teacher.user_id,
                                       stored.meta.construction_id)
        assert back.doc == midpoint_doc and back.revision == 1
        assert again.activity_count() == n_records + 1  # reopen logged a load


class TestActivityRegistry:
    def test_dense_monotone_seqs(self, store, student, midpoint_doc):
        for i in range(5):
            store.save_construction(student.user_id, f"c{i}", midpoint_doc)
        seqs = [r.seq for r in store.query_activity()]
        assert seqs == list(range(1, len(seqs) + 1))

    def test_query_filters(self, store, student, teacher, midpoint_doc):
        store.save_construction(student.user_id, "a", midpoint_doc)
        store.save_construction(teacher.user_id, "b", midpoint_doc)
        mine = store.query_activity(actor=student.user_id, action="save")
        assert len(mine) == 1
        assert mine[0].payload["name"] == "a"

    def test_query_empty_range(self, store, student, midpoint_doc):
        store.save_construction(student.user_id, "a", midpoint_doc)
        assert store.query_activity(since="2999-01-01T00:00:00.000Z") == []

    def test_torn_tail_truncated_on_reopen(self, tmp_path, midpoint_doc):
        store = Store(tmp_path / "d")
        store.put_user(User("u_x", "x", None, "student"))
        store.save_construction("u_x", "a", midpoint_doc)
        store.save_construction("u_x", "b", midpoint_doc)
        log = tmp_path / "d" / "activity" / "log"
        raw = log.read_bytes()
        log.write_bytes(raw[:-7])  # tear the final record

        again = Store(tmp_path / "d")
        assert again.activity_count() == 1
        record = again.query_activity()[0]
        assert record.payload["name"] == "a"
        # appending continues with dense seqs after the truncation
        again.append_activity("u_x", "chat", {"text": "hi"})
        assert [r.seq for r in again.query_activity()] == [1, 2]

    def test_stream_uses_index(self, store, student, midpoint_doc):
        for i in range(250):
            store.append_activity(student.user_id, "chat", {"i": i})
        last = store.query_activity()[-1].seq
        tail = list(store.stream_activity(from_seq=205))
        assert [r.seq for r in tail] == list(range(205, last + 1))
        assert (store.root / "activity" / "index").exists()

    def test_unknown_action_rejected(self, store):
        with pytest.raises(Exception):
            store.append_activity("u", "explode", {})


class SimulatedCrash(Exception):
    pass


DOC1 = build_doc(("free", 0, 0), ("free", 2, 0))
DOC1B = build_doc(("free", 0, 0), ("free", 2, 0), ("Midpoint", (0, 1)))
DOC2 = build_doc(("free", 1, 1))


def crash_consistency_scenario(tmp_path, crash_at: int | None,
                               points: list | None = None):
    """Run a scripted workload, optionally crash at fault point #crash_at.

    Returns (committed, in_flight, root): ``committed`` maps construction id
    to its acknowledged (revision, doc) or None for an acknowledged delete;
    ``in_flight`` describes the crashed operation, if any, as
    (op, cid-or-None, post_revision, post_doc).
    """
    counter = [0]

    def hook(point, path):
        if points is not None:
            points.append((point, path))
        counter[0] += 1
        if crash_at is not None and counter[0] == crash_at:
            raise SimulatedCrash(point)

    root = tmp_path / "crashdata"
    committed: dict = {}
    in_flight = None
    try:
        store = Store(root, fault_hook=hook)
        store.put_user(User("u_s", "s", None, "student"))

        in_flight = ("save", None, 1, DOC1)
        c1 = store.save_construction("u_s", "one", DOC1).meta.construction_id
        committed[c1] = (1, DOC1)

        in_flight = ("save", None, 1, DOC2)
        c2 = store.save_construction("u_s", "two", DOC2).meta.construction_id
        committed[c2] = (1, DOC2)

        in_flight = ("update", c1, 2, DOC1B)
        store.update_construction("u_s", c1, DOC1B, 1)
        committed[c1] = (2, DOC1B)

        in_flight = ("delete", c2, None, None)
        store.delete_construction("u_s", c2)
        committed[c2] = None

        in_flight = None
    except SimulatedCrash:
        return committed, in_flight, root
    return committed, None, root


def state_of(store, cid):
    got = store.get_construction(cid)
    if got is None:
        return None
    return (got.revision, canonical_serialize(got.doc))


def as_state(entry):
    if entry is None:
        return None
    rev, doc = entry
    return (rev, canonical_serialize(doc))


class TestCrashConsistency:
    def test_every_fault_point(self, tmp_path):
        points: list = []
        crash_consistency_scenario(tmp_path / "probe", None, points)
        total = len(points)
        assert total > 20

        for crash_at in range(1, total + 1):
            committed, in_flight, root = crash_consistency_scenario(
                tmp_path / f"run{crash_at}", crash_at)
            store = Store(root)  # recovery must succeed

            for cid, entry in committed.items():
                allowed = {as_state(entry)}
                if in_flight and in_flight[1] == cid:
                    # the crashed op may have landed: old or new, never torn
                    allowed.add(as_state((in_flight[2], in_flight[3]))
                                if in_flight[3] is not None else None)
                assert state_of(store, cid) in allowed, \
                    f"torn or lost state for {cid} at point {crash_at}"

            known = set(committed)
            extras = [m.construction_id for m in store.list_visible("u_s")
                      if m.construction_id not in known]
            if in_flight and in_flight[0] == "save":
                # an unacknowledged save may roll forward with its exact doc
                for cid in extras:
                    assert state_of(store, cid) == as_state(
                        (in_flight[2], in_flight[3]))
            else:
                assert extras == []

            seqs = [r.seq for r in store.query_activity()]
            assert seqs == list(range(1, len(seqs) + 1))
