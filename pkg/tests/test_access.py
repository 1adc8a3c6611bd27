from __future__ import annotations

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from geolab.access import (
    ADMIN,
    DEFAULT_PERMISSIONS,
    READ,
    RIGHTS,
    STUDENT,
    TEACHER,
    VISIBLE,
    WRITE,
    ConstructionMeta,
    Group,
    PermissionTriple,
    check_access,
    format_permissions,
    hash_password,
    parse_permissions,
    verify_password,
)
from geolab.errors import ValidationError


class TestPermissionStrings:
    def test_default_string(self):
        triple = parse_permissions("rwvr-v---")
        assert triple.owner == frozenset({READ, WRITE, VISIBLE})
        assert triple.group == frozenset({READ, VISIBLE})
        assert triple.others == frozenset()
        assert triple == DEFAULT_PERMISSIONS

    def test_empty_string(self):
        triple = parse_permissions("---------")
        assert triple.owner == triple.group == triple.others == frozenset()

    def test_letters_out_of_slot_order(self):
        with pytest.raises(ValidationError):
            parse_permissions("rvw------")

    def test_wrong_length(self):
        with pytest.raises(ValidationError):
            parse_permissions("rwv")

    def test_round_trip_all_512(self):
        for mask in range(512):
            text = "".join(
                letter if mask & (1 << i) else "-"
                for i, letter in enumerate("rwvrwvrwv"))
            assert format_permissions(parse_permissions(text)) == text

    @given(st.integers(0, 511))
    def test_parse_format_identity(self, mask):
        text = "".join(letter if mask & (1 << i) else "-"
                       for i, letter in enumerate("rwvrwvrwv"))
        assert format_permissions(parse_permissions(text)) == text


def relation_fixture():
    """owner / attached-group member / teacher-of-owner / unrelated actors."""
    owner = "u_owner"
    member = "u_member"
    teacher = "u_teacher"
    unrelated = "u_other"
    groups = {
        "g_att": Group("g_att", "attached", owner="u_someteacher",
                       members={owner, member}),
        "g_taught": Group("g_taught", "class", owner=teacher, members={owner}),
    }
    def meta(mask_text):
        return ConstructionMeta("c_1", owner, "doc",
                                parse_permissions(mask_text),
                                attached_groups={"g_att"})
    return owner, member, teacher, unrelated, groups, meta


class TestCheckAccess:
    def test_owner_has_all_defaults(self):
        owner, _, _, _, groups, meta = relation_fixture()
        m = meta("rwvr-v---")
        assert all(check_access(owner, m, want, groups) for want in RIGHTS)

    def test_group_member_defaults(self):
        _, member, _, _, groups, meta = relation_fixture()
        m = meta("rwvr-v---")
        assert check_access(member, m, READ, groups)
        assert check_access(member, m, VISIBLE, groups)
        assert not check_access(member, m, WRITE, groups)

    def test_unrelated_denied_defaults(self):
        *_, unrelated, groups, meta = relation_fixture()
        m = meta("rwvr-v---")
        assert not any(check_access(unrelated, m, want, groups) for want in RIGHTS)

    def test_teacher_override_read_visible_never_write(self):
        _, _, teacher, _, groups, meta = relation_fixture()
        m = meta("---------")
        assert check_access(teacher, m, READ, groups)
        assert check_access(teacher, m, VISIBLE, groups)
        assert not check_access(teacher, m, WRITE, groups)

    def test_group_write_grant(self):
        _, member, _, _, groups, meta = relation_fixture()
        m = meta("rwvrwv---")
        assert check_access(member, m, WRITE, groups)

    def test_any_attached_group_selects_group_slot(self):
        owner, member, teacher, unrelated, groups, meta = relation_fixture()
        m = ConstructionMeta("c_2", owner, "doc", parse_permissions("rwvr-v---"),
                             attached_groups={"g_none", "g_att"})
        assert check_access(member, m, READ, groups)

    def test_owner_implicit_in_group(self):
        # the owning teacher of an attached group falls in the group slot
        owner = "u_owner"
        groups = {"g": Group("g", "g", owner="u_t", members={owner})}
        m = ConstructionMeta("c", owner, "d", parse_permissions("---r-v---"),
                             attached_groups={"g"})
        assert check_access("u_t", m, READ, groups)

    def test_read_without_visible_is_unlisted_but_loadable(self):
        owner, _, _, unrelated, groups, meta = relation_fixture()
        m = meta("rwvr-vr--")
        assert check_access(unrelated, m, READ, groups)
        assert not check_access(unrelated, m, VISIBLE, groups)

    def test_unknown_want_rejected(self):
        owner, *_, groups, meta = relation_fixture()
        with pytest.raises(ValidationError):
            check_access(owner, meta("rwvr-v---"), "execute", groups)


def oracle_truth_table_entry(mask: int, relation: str, want_index: int,
                             attached: bool = True) -> bool:
    """Independent brute-force oracle, written directly from the rules:
    slot bits by relation (group slot only while the group is attached),
    plus the teacher read/visible override."""
    owner_bits = (mask >> 0) & 0b111
    group_bits = (mask >> 3) & 0b111
    others_bits = (mask >> 6) & 0b111
    slot = {"owner": owner_bits,
            "member": group_bits if attached else others_bits,
            "teacher": others_bits, "unrelated": others_bits}[relation]
    granted = bool(slot & (1 << want_index))
    if relation == "teacher" and want_index != 1:  # read=0, write=1, visible=2
        granted = True
    return granted


class TestTruthTableOracle:
    def test_exhaustive_agreement(self):
        owner, member, teacher, unrelated, groups, _ = relation_fixture()
        actors = {"owner": owner, "member": member, "teacher": teacher,
                  "unrelated": unrelated}
        wants = [READ, WRITE, VISIBLE]
        for mask, relation, want_index in itertools.product(
                range(512), actors, range(3)):
            text = "".join(
                letter if mask & (1 << i) else "-"
                for i, letter in enumerate("rwvrwvrwv"))
            meta = ConstructionMeta("c", owner, "d", parse_permissions(text),
                                    attached_groups={"g_att"})
            got = check_access(actors[relation], meta, wants[want_index], groups)
            want = oracle_truth_table_entry(mask, relation, want_index)
            assert got == want, (text, relation, wants[want_index])


class TestPasswords:
    def test_round_trip(self):
        digest = hash_password("pass123", iterations=1000)
        assert verify_password("pass123", digest)
        assert not verify_password("pass124", digest)

    def test_distinct_salts(self):
        assert hash_password("a", 1000) != hash_password("a", 1000)

    def test_verify_none(self):
        assert not verify_password("a", None)
        assert not verify_password("a", "garbage")
