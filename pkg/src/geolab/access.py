"""Users, roles, groups and the Unix-style rwv permission decision procedure.

Per construction there are three permission slots (owner / group / others),
each a subset of {read, write, visible}, written as a fixed 9-character
string such as the default "rwvr-v---".  ``visible`` controls appearance in
listings, ``read`` controls content download: a construction that is
readable but not visible can be opened by direct id yet stays unlisted.

Teachers additionally get read+visible (never write) on every construction
whose owner belongs to a group they own.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import time
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, Mapping

from .errors import AccessDenied, AuthError, Conflict, NotFound, ValidationError

if TYPE_CHECKING:
    from .store import Store

READ = "read"
WRITE = "write"
VISIBLE = "visible"
RIGHTS = (READ, WRITE, VISIBLE)

ADMIN = "admin"
TEACHER = "teacher"
STUDENT = "student"
ROLES = (ADMIN, TEACHER, STUDENT)

# who may create whom
CREATION_MATRIX = {ADMIN: TEACHER, TEACHER: STUDENT}

_SLOT_LETTERS = "rwv"
_LETTER_RIGHT = {"r": READ, "w": WRITE, "v": VISIBLE}


@dataclass(frozen=True)
class PermissionTriple:
    owner: frozenset[str]
    group: frozenset[str]
    others: frozenset[str]

    def slot(self, name: str) -> frozenset[str]:
        return getattr(self, name)


def parse_permissions(text: str) -> PermissionTriple:
    """Decode a 9-character rwv string; each position admits only its letter."""
    if not isinstance(text, str) or len(text) != 9:
        raise ValidationError("permission string must be exactly 9 characters")
    slots = []
    for base in (0, 3, 6):
        rights = set()
        for offset, letter in enumerate(_SLOT_LETTERS):
            ch = text[base + offset]
            if ch == letter:
                rights.add(_LETTER_RIGHT[letter])
            elif ch != "-":
                raise ValidationError(
                    f"position {base + offset} must be {letter!r} or '-', got {ch!r}")
        slots.append(frozenset(rights))
    return PermissionTriple(owner=slots[0], group=slots[1], others=slots[2])


def format_permissions(triple: PermissionTriple) -> str:
    out = []
    for slot in (triple.owner, triple.group, triple.others):
        for letter in _SLOT_LETTERS:
            out.append(letter if _LETTER_RIGHT[letter] in slot else "-")
    return "".join(out)


DEFAULT_PERMISSIONS = parse_permissions("rwvr-v---")


@dataclass
class User:
    user_id: str
    username: str
    password_digest: str | None
    role: str
    locale: str = "en"
    created_by: str | None = None


@dataclass
class Group:
    group_id: str
    name: str
    owner: str
    members: set[str] = field(default_factory=set)

    def effective_members(self) -> set[str]:
        """Members with the owner implicitly included."""
        return self.members | {self.owner}


@dataclass
class ConstructionMeta:
    construction_id: str
    owner: str
    name: str
    permissions: PermissionTriple
    attached_groups: set[str] = field(default_factory=set)
    created_at: str = ""
    modified_at: str = ""


def check_access(actor: str, meta: ConstructionMeta, want: str,
                 groups: Mapping[str, Group]) -> bool:
    """Unix-style slot decision OR-ed with the teacher read/visible override."""
    if want not in RIGHTS:
        raise ValidationError(f"unknown access kind {want!r}")
    if actor == meta.owner:
        slot = meta.permissions.owner
    elif any(gid in groups and actor in groups[gid].effective_members()
             for gid in meta.attached_groups):
        slot = meta.permissions.group
    else:
        slot = meta.permissions.others
    if want in slot:
        return True
    if want == WRITE:
        return False
    return any(g.owner == actor and meta.owner in g.effective_members()
               for g in groups.values())


# -- password digests (salted, slow) ---------------------------------------

def hash_password(password: str, iterations: int = 60_000) -> str:
    salt = secrets.token_hex(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"),
                                 bytes.fromhex(salt), iterations)
    return f"pbkdf2-sha256${iterations}${salt}${digest.hex()}"


def verify_password(password: str, stored: str | None) -> bool:
    if not stored:
        return False
    try:
        scheme, iterations, salt, digest = stored.split("$")
        if scheme != "pbkdf2-sha256":
            return False
        candidate = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"),
                                        bytes.fromhex(salt), int(iterations))
    except (ValueError, TypeError):
        return False
    return hmac.compare_digest(candidate.hex(), digest)


@dataclass
class SessionToken:
    token: str
    user_id: str
    expires_at: float


class Identity:
    """Account, group and permission administration over the store.

    Tokens are opaque, in-memory and expiring; losing the server process
    simply forces re-authentication.
    """

    LOGIN_FAILED = "invalid username or password"

    def __init__(self, store: "Store", token_ttl_seconds: float = 12 * 3600,
                 hash_iterations: int = 60_000, clock=time.monotonic):
        self.store = store
        self.token_ttl = token_ttl_seconds
        self.hash_iterations = hash_iterations
        self.clock = clock
        self._tokens: dict[str, SessionToken] = {}

    # -- authentication ----------------------------------------------------

    def authenticate(self, username: str, password: str) -> tuple[str, User]:
        user = self.store.user_by_name(username)
        # verify even for unknown users so failures are uniform
        digest = user.password_digest if user else None
        if not verify_password(password, digest) or user is None:
            raise AuthError(self.LOGIN_FAILED)
        token = secrets.token_urlsafe(32)
        self._tokens[token] = SessionToken(token, user.user_id,
                                           self.clock() + self.token_ttl)
        self.store.append_activity(user.user_id, "login",
                                   {"username": username})
        return token, user

    def resolve(self, token: str | None) -> User:
        entry = self._tokens.get(token or "")
        if entry is None:
            raise AuthError("invalid or expired token")
        if self.clock() >= entry.expires_at:
            del self._tokens[token]
            raise AuthError("invalid or expired token")
        user = self.store.get_user(entry.user_id)
        if user is None:
            raise AuthError("invalid or expired token")
        return user

    def logout(self, token: str) -> None:
        self._tokens.pop(token, None)

    # -- user administration -------------------------------------------------

    def create_user(self, actor: User, username: str, password: str,
                    role: str, locale: str = "en") -> User:
        if role not in ROLES:
            raise ValidationError(f"unknown role {role!r}")
        if CREATION_MATRIX.get(actor.role) != role:
            raise AccessDenied(f"{actor.role} may not create {role} accounts")
        if not username:
            raise ValidationError("username must not be empty")
        if self.store.user_by_name(username) is not None:
            raise Conflict(f"username {username!r} already exists")
        user = User(user_id=self.store.new_id("u"), username=username,
                    password_digest=hash_password(password, self.hash_iterations),
                    role=role, locale=locale, created_by=actor.user_id)
        self.store.put_user(user)
        self.store.append_activity(actor.user_id, "user-create",
                                   {"user_id": user.user_id, "username": username,
                                    "role": role})
        return user

    # -- groups --------------------------------------------------------------

    def create_group(self, actor: User, name: str) -> Group:
        if actor.role != TEACHER:
            raise AccessDenied("only teachers create groups")
        if not name:
            raise ValidationError("group name must not be empty")
        group = Group(group_id=self.store.new_id("g"), name=name,
                      owner=actor.user_id)
        self.store.put_group(group)
        self.store.append_activity(actor.user_id, "group-change",
                                   {"event": "create", "group_id": group.group_id,
                                    "name": name})
        return group

    def _owned_group(self, actor: User, group_id: str) -> Group:
        group = self.store.get_group(group_id)
        if group is None:
            raise NotFound(f"unknown group {group_id}")
        if group.owner != actor.user_id:
            raise AccessDenied("only the owning teacher may modify a group")
        return group

    def delete_group(self, actor: User, group_id: str) -> None:
        self._owned_group(actor, group_id)
        self.store.delete_group(group_id)  # detaches from constructions
        self.store.append_activity(actor.user_id, "group-change",
                                   {"event": "delete", "group_id": group_id})

    def set_membership(self, actor: User, group_id: str,
                       members: Iterable[str]) -> Group:
        group = self._owned_group(actor, group_id)
        new_members = set(members)
        for uid in new_members:
            if self.store.get_user(uid) is None:
                raise NotFound(f"unknown user {uid}")
        group = replace_members(group, new_members)
        self.store.put_group(group)
        self.store.append_activity(actor.user_id, "group-change",
                                   {"event": "membership", "group_id": group_id,
                                    "members": sorted(new_members)})
        return group

    # -- construction permissions ---------------------------------------------

    def _owned_meta(self, actor: User, construction_id: str) -> ConstructionMeta:
        meta = self.store.get_meta(construction_id)
        if meta is None:
            raise NotFound(f"unknown construction {construction_id}")
        if meta.owner != actor.user_id:
            raise AccessDenied("only the owner may change permissions")
        return meta

    def set_permissions(self, actor: User, construction_id: str,
                        triple: PermissionTriple) -> ConstructionMeta:
        meta = self._owned_meta(actor, construction_id)
        meta = replace(meta, permissions=triple)
        self.store.put_meta(meta)
        self.store.append_activity(actor.user_id, "perm-change",
                                   {"construction_id": construction_id,
                                    "permissions": format_permissions(triple)})
        return meta

    def attach_group(self, actor: User, construction_id: str,
                     group_id: str) -> ConstructionMeta:
        meta = self._owned_meta(actor, construction_id)
        if self.store.get_group(group_id) is None:
            raise NotFound(f"unknown group {group_id}")
        meta = replace(meta, attached_groups=meta.attached_groups | {group_id})
        self.store.put_meta(meta)
        self.store.append_activity(actor.user_id, "perm-change",
                                   {"construction_id": construction_id,
                                    "event": "attach", "group_id": group_id})
        return meta

    def detach_group(self, actor: User, construction_id: str,
                     group_id: str) -> ConstructionMeta:
        meta = self._owned_meta(actor, construction_id)
        meta = replace(meta, attached_groups=meta.attached_groups - {group_id})
        self.store.put_meta(meta)
        self.store.append_activity(actor.user_id, "perm-change",
                                   {"construction_id": construction_id,
                                    "event": "detach", "group_id": group_id})
        return meta


def replace_members(group: Group, members: set[str]) -> Group:
    return Group(group_id=group.group_id, name=group.name,
                 owner=group.owner, members=set(members))
