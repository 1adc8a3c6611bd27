"""Crash-consistent file-backed persistence: users, groups, constructions and
the append-only activity registry.

Layout under the data directory:

    users/<user_id>            one JSON record per user
    groups/<group_id>          one JSON record per group
    constructions/<id>/meta    construction metadata + revision
    constructions/<id>/doc     canonical construction bytes
    constructions/<id>/commit  transient redo journal (meta+doc pair)
    activity/log               append-only registry, one record per line
    activity/index             periodic seq -> byte offset checkpoints

Every file write goes through write-temp-fsync-rename.  A meta+doc pair is
committed by first landing a redo journal; recovery replays or discards it,
so a reader never observes a torn construction.  Activity records are
fsynced before the triggering operation acknowledges.

All mutations are serialized through one internal lock (the single-writer
contract); the store may be called from many request handlers at once.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable

from .access import (
    DEFAULT_PERMISSIONS,
    WRITE,
    READ,
    VISIBLE,
    ConstructionMeta,
    Group,
    User,
    check_access,
    format_permissions,
    parse_permissions,
)
from .errors import AccessDenied, Conflict, NotFound, ValidationError
from .kernel import ConstructionDocument, canonical_serialize, parse

FORMAT_VERSION = 1
INDEX_EVERY = 100

ACTIONS = frozenset({
    "login", "save", "load", "delete", "perm-change", "group-change",
    "lock-request", "lock-grant", "lock-release", "edit", "chat", "check",
    "user-create", "session-open", "session-close", "session-join",
    "session-leave",
})

FaultHook = Callable[[str, str], None]


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds") \
        .replace("+00:00", "Z")


def encode_record(obj: dict[str, Any]) -> str:
    """The structured text encoding shared with the wire protocol."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class ActivityRecord:
    seq: int
    timestamp: str
    actor: str
    action: str
    payload: dict[str, Any]
    session: str | None = None

    def to_obj(self) -> dict[str, Any]:
        obj: dict[str, Any] = {"seq": self.seq, "timestamp": self.timestamp,
                               "actor": self.actor, "action": self.action,
                               "payload": self.payload}
        if self.session is not None:
            obj["session"] = self.session
        return obj

    @staticmethod
    def from_obj(obj: dict[str, Any]) -> "ActivityRecord":
        return ActivityRecord(seq=obj["seq"], timestamp=obj["timestamp"],
                              actor=obj["actor"], action=obj["action"],
                              payload=obj.get("payload", {}),
                              session=obj.get("session"))


@dataclass
class StoredConstruction:
    meta: ConstructionMeta
    doc: ConstructionDocument
    revision: int


class Store:
    """File-backed store; ``durable=False`` skips fsync (simulation speed-up)."""

    def __init__(self, data_dir: str | Path, durable: bool = True,
                 fault_hook: FaultHook | None = None):
        self.root = Path(data_dir)
        self.durable = durable
        self.fault_hook = fault_hook
        self._lock = threading.RLock()
        self._users: dict[str, User] = {}
        self._by_username: dict[str, str] = {}
        self._groups: dict[str, Group] = {}
        self._metas: dict[str, ConstructionMeta] = {}
        self._revisions: dict[str, int] = {}
        self._docs: dict[str, ConstructionDocument] = {}
        self._activity: list[ActivityRecord] = []
        self._log_path = self.root / "activity" / "log"
        self._index_path = self.root / "activity" / "index"
        self._open()

    # -- low-level durability ------------------------------------------------

    def _hook(self, point: str, path: Path) -> None:
        if self.fault_hook is not None:
            self.fault_hook(point, str(path))

    def _fsync_file(self, fd: int) -> None:
        if self.durable:
            os.fsync(fd)

    def _fsync_dir(self, path: Path) -> None:
        if not self.durable:
            return
        fd = os.open(path, os.O_RDONLY)
        try:
            os.fsync(fd)
        finally:
            os.close(fd)

    def _atomic_write(self, path: Path, data: bytes) -> None:
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as f:
            f.write(data)
            self._hook("tmp-written", path)
            f.flush()
            self._fsync_file(f.fileno())
        self._hook("tmp-synced", path)
        os.replace(tmp, path)
        self._hook("renamed", path)
        self._fsync_dir(path.parent)
        self._hook("dir-synced", path)

    # -- open / recovery -------------------------------------------------------

    def _open(self) -> None:
        for sub in ("users", "groups", "constructions", "activity"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._sweep_tmp_files()
        self._recover_constructions()
        self._load_users_groups()
        self._recover_activity_log()

    def _sweep_tmp_files(self) -> None:
        for tmp in self.root.rglob("*.tmp"):
            tmp.unlink(missing_ok=True)

    def _recover_constructions(self) -> None:
        for entry in sorted((self.root / "constructions").iterdir()):
            if not entry.is_dir():
                continue
            journal = entry / "commit"
            if journal.exists():
                self._apply_journal(entry, json.loads(journal.read_text("utf-8")))
            meta_path = entry / "meta"
            if not meta_path.exists():
                # crash mid-create: no committed state, discard leftovers
                for leftover in entry.iterdir():
                    leftover.unlink()
                entry.rmdir()
                continue
            meta_obj = json.loads(meta_path.read_text("utf-8"))
            meta = self._meta_from_obj(meta_obj)
            self._metas[meta.construction_id] = meta
            self._revisions[meta.construction_id] = meta_obj["revision"]

    def _apply_journal(self, entry: Path, record: dict[str, Any]) -> None:
        self._atomic_write(entry / "meta", encode_record(record["meta"]).encode("utf-8"))
        self._atomic_write(entry / "doc", record["doc"].encode("utf-8"))
        (entry / "commit").unlink()
        self._hook("journal-removed", entry / "commit")
        self._fsync_dir(entry)

    def _load_users_groups(self) -> None:
        for path in sorted((self.root / "users").iterdir()):
            if path.name.endswith(".tmp"):
                continue
            obj = json.loads(path.read_text("utf-8"))
            user = User(user_id=obj["user_id"], username=obj["username"],
                        password_digest=obj.get("password_digest"),
                        role=obj["role"], locale=obj.get("locale", "en"),
                        created_by=obj.get("created_by"))
            self._users[user.user_id] = user
            self._by_username[user.username] = user.user_id
        for path in sorted((self.root / "groups").iterdir()):
            if path.name.endswith(".tmp"):
                continue
            obj = json.loads(path.read_text("utf-8"))
            group = Group(group_id=obj["group_id"], name=obj["name"],
                          owner=obj["owner"], members=set(obj.get("members", ())))
            self._groups[group.group_id] = group

    def _recover_activity_log(self) -> None:
        if not self._log_path.exists():
            header = encode_record({"format_version": FORMAT_VERSION}) + "\n"
            self._atomic_write(self._log_path, header.encode("utf-8"))
            return
        raw = self._log_path.read_bytes()
        records: list[ActivityRecord] = []
        pos = 0
        keep = 0
        while pos < len(raw):
            nl = raw.find(b"\n", pos)
            if nl == -1:
                break  # torn tail: record was appended without its terminator
            try:
                obj = json.loads(raw[pos:nl].decode("utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError):
                break  # damaged line: keep only what precedes it
            if "seq" in obj:
                records.append(ActivityRecord.from_obj(obj))
            pos = nl + 1
            keep = pos
        if keep != len(raw):
            with open(self._log_path, "r+b") as f:
                f.truncate(keep)
                self._fsync_file(f.fileno())
        self._activity = records

    # -- ids -------------------------------------------------------------------

    def new_id(self, prefix: str) -> str:
        while True:
            candidate = f"{prefix}_{secrets.token_hex(6)}"
            taken = (candidate in self._users or candidate in self._groups
                     or candidate in self._metas)
            if not taken:
                return candidate

    # -- users / groups ---------------------------------------------------------

    def get_user(self, user_id: str) -> User | None:
        with self._lock:
            return self._users.get(user_id)

    def user_by_name(self, username: str) -> User | None:
        with self._lock:
            uid = self._by_username.get(username)
            return self._users.get(uid) if uid else None

    def users(self) -> list[User]:
        with self._lock:
            return list(self._users.values())

    def put_user(self, user: User) -> None:
        with self._lock:
            obj = {"format_version": FORMAT_VERSION, "user_id": user.user_id,
                   "username": user.username,
                   "password_digest": user.password_digest, "role": user.role,
                   "locale": user.locale, "created_by": user.created_by}
            self._atomic_write(self.root / "users" / user.user_id,
                               encode_record(obj).encode("utf-8"))
            self._users[user.user_id] = user
            self._by_username[user.username] = user.user_id

    def get_group(self, group_id: str) -> Group | None:
        with self._lock:
            return self._groups.get(group_id)

    def groups(self) -> dict[str, Group]:
        with self._lock:
            return dict(self._groups)

    def put_group(self, group: Group) -> None:
        with self._lock:
            obj = {"format_version": FORMAT_VERSION, "group_id": group.group_id,
                   "name": group.name, "owner": group.owner,
                   "members": sorted(group.members)}
            self._atomic_write(self.root / "groups" / group.group_id,
                               encode_record(obj).encode("utf-8"))
            self._groups[group.group_id] = group

    def delete_group(self, group_id: str) -> None:
        """Remove a group and detach it from every construction."""
        with self._lock:
            if group_id not in self._groups:
                raise NotFound(f"unknown group {group_id}")
            for meta in list(self._metas.values()):
                if group_id in meta.attached_groups:
                    self.put_meta(replace(
                        meta, attached_groups=meta.attached_groups - {group_id}))
            path = self.root / "groups" / group_id
            path.unlink(missing_ok=True)
            self._fsync_dir(path.parent)
            del self._groups[group_id]

    # -- construction metadata ---------------------------------------------------

    def _meta_to_obj(self, meta: ConstructionMeta, revision: int) -> dict[str, Any]:
        return {"format_version": FORMAT_VERSION,
                "construction_id": meta.construction_id, "owner": meta.owner,
                "name": meta.name,
                "permissions": format_permissions(meta.permissions),
                "attached_groups": sorted(meta.attached_groups),
                "created_at": meta.created_at, "modified_at": meta.modified_at,
                "revision": revision}

    @staticmethod
    def _meta_from_obj(obj: dict[str, Any]) -> ConstructionMeta:
        return ConstructionMeta(
            construction_id=obj["construction_id"], owner=obj["owner"],
            name=obj["name"], permissions=parse_permissions(obj["permissions"]),
            attached_groups=set(obj.get("attached_groups", ())),
            created_at=obj["created_at"], modified_at=obj["modified_at"])

    def get_meta(self, construction_id: str) -> ConstructionMeta | None:
        with self._lock:
            return self._metas.get(construction_id)

    def put_meta(self, meta: ConstructionMeta) -> None:
        """Metadata-only update (permissions, attachments); doc untouched."""
        with self._lock:
            if meta.construction_id not in self._metas:
                raise NotFound(f"unknown construction {meta.construction_id}")
            revision = self._revisions[meta.construction_id]
            path = self.root / "constructions" / meta.construction_id / "meta"
            self._atomic_write(path, encode_record(
                self._meta_to_obj(meta, revision)).encode("utf-8"))
            self._metas[meta.construction_id] = meta

    # -- construction documents ----------------------------------------------------

    def _commit_construction(self, meta: ConstructionMeta, revision: int,
                             doc: ConstructionDocument) -> None:
        entry = self.root / "constructions" / meta.construction_id
        entry.mkdir(exist_ok=True)
        doc_text = canonical_serialize(doc).decode("utf-8")
        journal = {"format_version": FORMAT_VERSION,
                   "construction_id": meta.construction_id,
                   "meta": self._meta_to_obj(meta, revision), "doc": doc_text}
        self._atomic_write(entry / "commit", encode_record(journal).encode("utf-8"))
        self._apply_journal(entry, journal)
        self._metas[meta.construction_id] = meta
        self._revisions[meta.construction_id] = revision
        self._docs[meta.construction_id] = doc

    def _doc_of(self, construction_id: str) -> ConstructionDocument:
        doc = self._docs.get(construction_id)
        if doc is None:
            path = self.root / "constructions" / construction_id / "doc"
            doc = parse(path.read_bytes())
            self._docs[construction_id] = doc
        return doc

    def save_construction(self, actor: str, name: str,
                          doc: ConstructionDocument) -> StoredConstruction:
        if not name:
            raise ValidationError("construction name must not be empty")
        with self._lock:
            now = utc_now_iso()
            meta = ConstructionMeta(
                construction_id=self.new_id("c"), owner=actor, name=name,
                permissions=DEFAULT_PERMISSIONS, attached_groups=set(),
                created_at=now, modified_at=now)
            self._commit_construction(meta, 1, doc)
            self.append_activity(actor, "save",
                                 {"construction_id": meta.construction_id,
                                  "name": name, "revision": 1})
            return StoredConstruction(meta=meta, doc=doc, revision=1)

    def update_construction(self, actor: str, construction_id: str,
                            doc: ConstructionDocument,
                            expected_revision: int) -> StoredConstruction:
        with self._lock:
            meta = self._metas.get(construction_id)
            if meta is None:
                raise NotFound(f"unknown construction {construction_id}")
            if not check_access(actor, meta, WRITE, self._groups):
                raise AccessDenied("write permission denied")
            current = self._revisions[construction_id]
            if expected_revision != current:
                raise Conflict(f"revision conflict: expected {expected_revision}, "
                               f"current {current}", current_revision=current)
            meta = replace(meta, modified_at=utc_now_iso())
            self._commit_construction(meta, current + 1, doc)
            self.append_activity(actor, "save",
                                 {"construction_id": construction_id,
                                  "revision": current + 1, "update": True})
            return StoredConstruction(meta=meta, doc=doc, revision=current + 1)

    def persist_session_document(self, actor: str, construction_id: str,
                                 doc: ConstructionDocument) -> int:
        """Write-back of a group session document; lock discipline already
        vouched for the edits, so no per-user write check applies here."""
        with self._lock:
            meta = self._metas.get(construction_id)
            if meta is None:
                raise NotFound(f"unknown construction {construction_id}")
            revision = self._revisions[construction_id] + 1
            meta = replace(meta, modified_at=utc_now_iso())
            self._commit_construction(meta, revision, doc)
            return revision

    def delete_construction(self, actor: str, construction_id: str) -> None:
        with self._lock:
            meta = self._metas.get(construction_id)
            if meta is None:
                raise NotFound(f"unknown construction {construction_id}")
            if meta.owner != actor:
                raise AccessDenied("only the owner may delete a construction")
            entry = self.root / "constructions" / construction_id
            (entry / "meta").unlink(missing_ok=True)
            self._hook("meta-unlinked", entry / "meta")
            (entry / "doc").unlink(missing_ok=True)
            (entry / "commit").unlink(missing_ok=True)
            entry.rmdir()
            self._fsync_dir(entry.parent)
            del self._metas[construction_id]
            del self._revisions[construction_id]
            self._docs.pop(construction_id, None)
            self.append_activity(actor, "delete",
                                 {"construction_id": construction_id})

    def load_construction(self, actor: str,
                          construction_id: str) -> StoredConstruction:
        with self._lock:
            meta = self._metas.get(construction_id)
            if meta is None:
                raise NotFound(f"unknown construction {construction_id}")
            if not check_access(actor, meta, READ, self._groups):
                raise AccessDenied("read permission denied")
            doc = self._doc_of(construction_id)
            self.append_activity(actor, "load",
                                 {"construction_id": construction_id,
                                  "revision": self._revisions[construction_id]})
            return StoredConstruction(meta=meta, doc=doc,
                                      revision=self._revisions[construction_id])

    def get_construction(self, construction_id: str) -> StoredConstruction | None:
        """Unlogged access for internal callers that already hold authority."""
        with self._lock:
            meta = self._metas.get(construction_id)
            if meta is None:
                return None
            return StoredConstruction(meta=meta, doc=self._doc_of(construction_id),
                                      revision=self._revisions[construction_id])

    def list_visible(self, actor: str) -> list[ConstructionMeta]:
        """Own scrapbook first, then group-visible, newest first per section."""
        with self._lock:
            own = []
            shared = []
            for meta in self._metas.values():
                if not check_access(actor, meta, VISIBLE, self._groups):
                    continue
                (own if meta.owner == actor else shared).append(meta)
            key = lambda m: (m.modified_at, m.construction_id)
            return sorted(own, key=key, reverse=True) + \
                sorted(shared, key=key, reverse=True)

    def revision_of(self, construction_id: str) -> int:
        with self._lock:
            if construction_id not in self._revisions:
                raise NotFound(f"unknown construction {construction_id}")
            return self._revisions[construction_id]

    # -- activity registry -----------------------------------------------------

    def append_activity(self, actor: str, action: str, payload: dict[str, Any],
                        session: str | None = None) -> ActivityRecord:
        if action not in ACTIONS:
            raise ValidationError(f"unknown activity action {action!r}")
        with self._lock:
            seq = self._activity[-1].seq + 1 if self._activity else 1
            record = ActivityRecord(seq=seq, timestamp=utc_now_iso(), actor=actor,
                                    action=action, payload=payload, session=session)
            line = encode_record(record.to_obj()) + "\n"
            with open(self._log_path, "ab") as f:
                offset = f.seek(0, os.SEEK_END)
                f.write(line.encode("utf-8"))
                self._hook("log-written", self._log_path)
                f.flush()
                self._fsync_file(f.fileno())
            self._hook("log-synced", self._log_path)
            self._activity.append(record)
            if seq % INDEX_EVERY == 0:
                with open(self._index_path, "a", encoding="utf-8") as idx:
                    idx.write(f"{seq} {offset}\n")
            return record

    def query_activity(self, actor: str | None = None, session: str | None = None,
                       action: str | None = None, since: str | None = None,
                       until: str | None = None,
                       limit: int | None = None) -> list[ActivityRecord]:
        with self._lock:
            out = []
            for record in self._activity:
                if actor is not None and record.actor != actor:
                    continue
                if session is not None and record.session != session:
                    continue
                if action is not None and record.action != action:
                    continue
                if since is not None and record.timestamp < since:
                    continue
                if until is not None and record.timestamp > until:
                    continue
                out.append(record)
                if limit is not None and len(out) >= limit:
                    break
            return out

    def activity_count(self) -> int:
        with self._lock:
            return len(self._activity)

    def stream_activity(self, from_seq: int = 1) -> Iterable[ActivityRecord]:
        """Read the registry from disk, seeking via the periodic index."""
        start_offset = 0
        if self._index_path.exists():
            try:
                for line in self._index_path.read_text("utf-8").splitlines():
                    seq_str, off_str = line.split()
                    if int(seq_str) <= from_seq:
                        start_offset = int(off_str)
            except ValueError:
                start_offset = 0
        with open(self._log_path, "rb") as f:
            if start_offset:
                f.seek(start_offset)
            for raw in f:
                if not raw.endswith(b"\n"):
                    break
                try:
                    obj = json.loads(raw.decode("utf-8"))
                except json.JSONDecodeError:
                    break
                if "seq" not in obj:  # header line
                    continue
                if obj["seq"] >= from_seq:
                    yield ActivityRecord.from_obj(obj)
