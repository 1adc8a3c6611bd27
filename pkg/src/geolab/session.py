"""Live group sessions: lock discipline, sequence-numbered sync deltas,
chat, presence and teacher observation.

One session binds a group to a shared construction.  Exactly one participant
holds the editing lock at any instant; edits from anyone else are rejected.
Every accepted event (edit, lock change, chat, presence change, close)
increments the per-session sequence number by one and is broadcast, in
order, to every present participant's mailbox.  The single-lock design makes
operation deltas sufficient for synchronization: there are no concurrent
writers to merge.
"""

from __future__ import annotations

import json
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

from .access import TEACHER, check_access, READ
from .errors import AccessDenied, Conflict, LockError, NotFound, ValidationError
from .kernel import (
    ConstructionDocument,
    add_step,
    apply_drag,
    dependent_closure,
    doc_to_obj,
    remove_step,
    step_from_obj,
    step_to_obj,
)
from .store import Store, utc_now_iso

CHAT_LIMIT = 2000
CHAT_TAIL_ON_JOIN = 100
CHAT_TAIL_BYTE_BUDGET = 65536  # keeps join/snapshot payloads bounded

ADD_STEP = "add-step"
REMOVE_STEP = "remove-step"
DRAG = "drag"
FULL_SNAPSHOT = "full-snapshot"
LOCK_CHANGED = "lock-changed"
CHAT = "chat"
PRESENCE = "presence"
CLOSED = "closed"


@dataclass(frozen=True)
class SyncDelta:
    seq: int
    kind: str
    payload: dict[str, Any]
    author: str

    def to_obj(self) -> dict[str, Any]:
        return {"seq": self.seq, "kind": self.kind, "payload": self.payload,
                "author": self.author}


@dataclass
class ChatMessage:
    seq: int
    author: str
    author_name: str
    text: str
    timestamp: str

    def to_obj(self) -> dict[str, Any]:
        return {"seq": self.seq, "author": self.author,
                "author_name": self.author_name, "text": self.text,
                "timestamp": self.timestamp}


@dataclass
class LockState:
    holder: str | None = None
    queue: list[str] = field(default_factory=list)

    def to_obj(self) -> dict[str, Any]:
        return {"holder": self.holder, "queue": list(self.queue)}


class Mailbox:
    """Per-participant ordered delta feed; ``notify`` hooks an async pump."""

    def __init__(self, notify: Callable[[], None] | None = None):
        self._items: deque = deque()
        self._lock = threading.Lock()
        self.notify = notify
        self.closed = False

    def deliver(self, item: dict[str, Any]) -> None:
        with self._lock:
            self._items.append(item)
        if self.notify is not None:
            self.notify()

    def close(self) -> None:
        self.closed = True
        if self.notify is not None:
            self.notify()

    def drain(self) -> list[dict[str, Any]]:
        with self._lock:
            items = list(self._items)
            self._items.clear()
        return items


@dataclass
class Presence:
    user_id: str
    username: str
    observer: bool
    last_seen: float
    mailbox: Mailbox

    def to_obj(self) -> dict[str, Any]:
        return {"user_id": self.user_id, "username": self.username,
                "observer": self.observer}


@dataclass
class SessionView:
    session_id: str
    group_id: str
    construction_id: str
    seq: int
    lock: dict[str, Any]
    present: list[dict[str, Any]]
    started_by: str


class _Session:
    def __init__(self, session_id: str, group_id: str, construction_id: str,
                 base_doc: ConstructionDocument, started_by: str):
        self.session_id = session_id
        self.group_id = group_id
        self.construction_id = construction_id
        self.base_doc = base_doc
        self.started_by = started_by
        self.seq = 0
        self.lock = LockState()
        self.present: dict[str, Presence] = {}
        self.chat: list[ChatMessage] = []
        self.delta_log: list[SyncDelta] = []
        self.mutex = threading.RLock()
        self.closed = False


class SessionHub:
    """All live sessions; mutations are serialized per session."""

    def __init__(self, store: Store, heartbeat_timeout: float = 30.0,
                 clock: Callable[[], float] = time.monotonic):
        self.store = store
        self.heartbeat_timeout = heartbeat_timeout
        self.clock = clock
        self._sessions: dict[str, _Session] = {}
        self._bindings: dict[tuple[str, str], str] = {}
        self._lock = threading.RLock()

    # -- helpers ---------------------------------------------------------------

    def _session(self, session_id: str) -> _Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None or session.closed:
            raise NotFound(f"unknown session {session_id}")
        return session

    def _membership(self, actor: str, group_id: str) -> tuple[bool, bool]:
        """(allowed, observer): group members and the owner teacher may enter."""
        group = self.store.get_group(group_id)
        if group is None:
            raise NotFound(f"unknown group {group_id}")
        user = self.store.get_user(actor)
        observer = (actor == group.owner and user is not None
                    and user.role == TEACHER)
        return actor in group.effective_members(), observer

    def _broadcast(self, session: _Session, delta: SyncDelta) -> None:
        session.delta_log.append(delta)
        message = {"type": "delta", "session_id": session.session_id,
                   **delta.to_obj()}
        for presence in session.present.values():
            presence.mailbox.deliver(message)

    def _emit(self, session: _Session, kind: str, payload: dict[str, Any],
              author: str) -> SyncDelta:
        session.seq += 1
        delta = SyncDelta(seq=session.seq, kind=kind, payload=payload,
                          author=author)
        self._broadcast(session, delta)
        return delta

    @staticmethod
    def _chat_tail(session: _Session) -> list[dict[str, Any]]:
        """Newest messages, at most 100 and at most the byte budget."""
        tail: list[dict[str, Any]] = []
        budget = CHAT_TAIL_BYTE_BUDGET
        for message in reversed(session.chat[-CHAT_TAIL_ON_JOIN:]):
            obj = message.to_obj()
            budget -= len(json.dumps(obj, ensure_ascii=False).encode("utf-8"))
            if budget < 0:
                break
            tail.append(obj)
        tail.reverse()
        return tail

    def _snapshot_obj(self, session: _Session) -> dict[str, Any]:
        return {"type": "snapshot",
                "session_id": session.session_id,
                "group_id": session.group_id,
                "construction_id": session.construction_id,
                "seq": session.seq,
                "doc": doc_to_obj(session.base_doc),
                "lock": session.lock.to_obj(),
                "present": [p.to_obj() for p in session.present.values()],
                "chat": self._chat_tail(session),
                "started_by": session.started_by}

    def view(self, session: _Session) -> SessionView:
        return SessionView(session_id=session.session_id,
                           group_id=session.group_id,
                           construction_id=session.construction_id,
                           seq=session.seq, lock=session.lock.to_obj(),
                           present=[p.to_obj() for p in session.present.values()],
                           started_by=session.started_by)

    # -- lifecycle ---------------------------------------------------------------

    def open_session(self, actor: str, group_id: str,
                     construction_id: str) -> SessionView:
        allowed, observer = self._membership(actor, group_id)
        if not (allowed or observer):
            raise AccessDenied("not a member of this group")
        meta = self.store.get_meta(construction_id)
        if meta is None:
            raise NotFound(f"unknown construction {construction_id}")
        if not check_access(actor, meta, READ, self.store.groups()):
            raise AccessDenied("read permission denied")
        with self._lock:
            binding = (group_id, construction_id)
            if binding in self._bindings:
                raise Conflict("a session is already open for this group "
                               "and construction")
            stored = self.store.get_construction(construction_id)
            session = _Session(session_id=self.store.new_id("s"),
                               group_id=group_id,
                               construction_id=construction_id,
                               base_doc=stored.doc, started_by=actor)
            self._sessions[session.session_id] = session
            self._bindings[binding] = session.session_id
        self.store.append_activity(actor, "session-open",
                                   {"group_id": group_id,
                                    "construction_id": construction_id,
                                    "revision": stored.revision},
                                   session=session.session_id)
        return self.view(session)

    def join(self, actor: str, session_id: str,
             notify: Callable[[], None] | None = None) -> dict[str, Any]:
        session = self._session(session_id)
        allowed, observer = self._membership(actor, session.group_id)
        if not (allowed or observer):
            raise AccessDenied("not a member of this group")
        user = self.store.get_user(actor)
        with session.mutex:
            rejoin = actor in session.present
            presence = Presence(
                user_id=actor, username=user.username if user else actor,
                observer=observer, last_seen=self.clock(), mailbox=Mailbox(notify))
            if not rejoin:
                # broadcast to the others; the joiner's snapshot covers it
                self._emit(session, PRESENCE,
                           {"event": "join", "user": presence.to_obj()},
                           author=actor)
            session.present[actor] = presence
            snapshot = self._snapshot_obj(session)
        self.store.append_activity(actor, "session-join",
                                   {"observer": observer},
                                   session=session_id)
        return snapshot

    def mailbox_of(self, session_id: str, actor: str) -> Mailbox:
        session = self._session(session_id)
        with session.mutex:
            presence = session.present.get(actor)
            if presence is None:
                raise ValidationError("not present in session")
            return presence.mailbox

    def snapshot(self, actor: str, session_id: str) -> dict[str, Any]:
        """Gap recovery: a read of current state, not an event."""
        session = self._session(session_id)
        with session.mutex:
            if actor not in session.present:
                raise ValidationError("not present in session")
            return self._snapshot_obj(session)

    def leave(self, actor: str, session_id: str) -> None:
        session = self._session(session_id)
        with session.mutex:
            presence = session.present.pop(actor, None)
            if presence is None:
                raise ValidationError("not present in session")
            presence.mailbox.close()
            transition = self._drop_from_lock(session, actor)
            holder_after = session.lock.holder
            self._emit(session, PRESENCE,
                       {"event": "leave", "user": presence.to_obj()},
                       author=actor)
        self.store.append_activity(actor, "session-leave",
                                   {"lock_passed_to": transition,
                                    "holder": holder_after},
                                   session=session_id)

    def touch(self, actor: str, session_id: str) -> None:
        session = self._session(session_id)
        with session.mutex:
            presence = session.present.get(actor)
            if presence is not None:
                presence.last_seen = self.clock()

    def expire(self, now: float | None = None) -> list[tuple[str, str]]:
        """Drop participants whose heartbeat timed out; returns (session, user)."""
        now = self.clock() if now is None else now
        dropped = []
        with self._lock:
            sessions = list(self._sessions.values())
        for session in sessions:
            if session.closed:
                continue
            with session.mutex:
                stale = [uid for uid, p in session.present.items()
                         if now - p.last_seen > self.heartbeat_timeout]
            for uid in stale:
                try:
                    self.leave(uid, session.session_id)
                    dropped.append((session.session_id, uid))
                except (NotFound, ValidationError):
                    pass
        return dropped

    def close_session(self, actor: str, session_id: str, persist: bool) -> int | None:
        session = self._session(session_id)
        _, observer = self._membership(actor, session.group_id)
        if actor != session.started_by and not observer:
            raise AccessDenied("only the starter or the owning teacher may "
                               "close the session")
        with session.mutex:
            revision = None
            if persist:
                revision = self.store.persist_session_document(
                    actor, session.construction_id, session.base_doc)
            self._emit(session, CLOSED,
                       {"persisted": persist, "revision": revision},
                       author=actor)
            session.closed = True
            for presence in session.present.values():
                presence.mailbox.close()
        with self._lock:
            self._bindings.pop((session.group_id, session.construction_id), None)
            self._sessions.pop(session_id, None)
        self.store.append_activity(actor, "session-close",
                                   {"persisted": persist, "revision": revision},
                                   session=session_id)
        return revision

    def close_all(self, persist: bool) -> None:
        with self._lock:
            sessions = list(self._sessions.values())
        for session in sessions:
            try:
                self.close_session(session.started_by, session.session_id, persist)
            except NotFound:
                pass

    def live_sessions(self, actor: str) -> list[SessionView]:
        """Sessions of groups the actor owns or belongs to (dashboard and
        the students' session picker)."""
        with self._lock:
            sessions = list(self._sessions.values())
        views = []
        for session in sessions:
            group = self.store.get_group(session.group_id)
            if group is not None and actor in group.effective_members():
                with session.mutex:
                    views.append(self.view(session))
        return views

    # -- the lock ------------------------------------------------------------------

    def _grant_next(self, session: _Session) -> str | None:
        if session.lock.queue:
            session.lock.holder = session.lock.queue.pop(0)
        else:
            session.lock.holder = None
        return session.lock.holder

    def _drop_from_lock(self, session: _Session, actor: str) -> str | None:
        """Remove a departing user from the lock; returns the new holder if
        the lock moved."""
        if session.lock.holder == actor:
            new_holder = self._grant_next(session)
            self._emit(session, LOCK_CHANGED,
                       {**session.lock.to_obj(), "reason": "leave"},
                       author=actor)
            return new_holder
        if actor in session.lock.queue:
            session.lock.queue.remove(actor)
            self._emit(session, LOCK_CHANGED,
                       {**session.lock.to_obj(), "reason": "leave"},
                       author=actor)
        return None

    def request_lock(self, actor: str, session_id: str) -> tuple[str, int | None]:
        session = self._session(session_id)
        with session.mutex:
            if actor not in session.present:
                raise ValidationError("not present in session")
            if session.lock.holder == actor:
                result = ("granted", None)
            elif actor in session.lock.queue:
                result = ("queued", session.lock.queue.index(actor) + 1)
            elif session.lock.holder is None:
                session.lock.holder = actor
                self._emit(session, LOCK_CHANGED,
                           {**session.lock.to_obj(), "reason": "grant"},
                           author=actor)
                result = ("granted", None)
            else:
                session.lock.queue.append(actor)
                self._emit(session, LOCK_CHANGED,
                           {**session.lock.to_obj(), "reason": "queue"},
                           author=actor)
                result = ("queued", len(session.lock.queue))
            holder = session.lock.holder
        self.store.append_activity(actor, "lock-request",
                                   {"result": result[0], "position": result[1],
                                    "holder": holder},
                                   session=session_id)
        return result

    def release_lock(self, actor: str, session_id: str) -> str | None:
        session = self._session(session_id)
        with session.mutex:
            if session.lock.holder != actor:
                raise LockError("lock not held")
            new_holder = self._grant_next(session)
            self._emit(session, LOCK_CHANGED,
                       {**session.lock.to_obj(), "reason": "release"},
                       author=actor)
        self.store.append_activity(actor, "lock-release",
                                   {"holder": new_holder}, session=session_id)
        return new_holder

    def force_transfer(self, actor: str, session_id: str, to: str) -> None:
        session = self._session(session_id)
        group = self.store.get_group(session.group_id)
        if group is None or group.owner != actor:
            raise AccessDenied("only the owning teacher may transfer the lock")
        with session.mutex:
            if to not in session.present:
                raise ValidationError(f"user {to} is not present in the session")
            previous = session.lock.holder
            if previous == to:
                return
            session.lock.holder = to
            if to in session.lock.queue:
                session.lock.queue.remove(to)
            self._emit(session, LOCK_CHANGED,
                       {**session.lock.to_obj(), "reason": "force",
                        "from": previous},
                       author=actor)
        self.store.append_activity(actor, "lock-grant",
                                   {"forced": True, "to": to, "from": previous,
                                    "holder": to},
                                   session=session_id)

    # -- edits and chat ----------------------------------------------------------------

    def apply_edit(self, actor: str, session_id: str,
                   edit: dict[str, Any]) -> SyncDelta:
        session = self._session(session_id)
        with session.mutex:
            if actor not in session.present:
                raise ValidationError("not present in session")
            if session.lock.holder != actor:
                raise LockError("edit rejected: lock not held")
            action = edit.get("action")
            if action == ADD_STEP:
                raw = dict(edit.get("step") or {})
                raw.setdefault("id", 0)
                raw.setdefault("args", [])
                candidate = step_from_obj(raw, "edit.step")
                new_doc = add_step(session.base_doc, candidate)
                placed = new_doc.steps[-1]
                payload = {"step": step_to_obj(placed)}
            elif action == REMOVE_STEP:
                target = edit.get("id")
                cascade = bool(edit.get("cascade", False))
                if not isinstance(target, int):
                    raise ValidationError("edit.id must be a step id")
                removed = sorted(
                    {target} | (dependent_closure(session.base_doc, target)
                                if cascade else set()))
                new_doc = remove_step(session.base_doc, target, cascade)
                payload = {"id": target, "cascade": cascade,
                           "removed_ids": removed}
            elif action == DRAG:
                target = edit.get("id")
                if not isinstance(target, int):
                    raise ValidationError("edit.id must be a step id")
                x, y = edit.get("x"), edit.get("y")
                if not isinstance(x, (int, float)) or not isinstance(y, (int, float)):
                    raise ValidationError("drag requires numeric x and y")
                new_doc = apply_drag(session.base_doc, target, float(x), float(y))
                payload = {"id": target, "x": float(x), "y": float(y)}
            else:
                raise ValidationError(f"unknown edit action {action!r}")
            session.base_doc = new_doc
            delta = self._emit(session, action, payload, author=actor)
        self.store.append_activity(actor, "edit",
                                   {"seq": delta.seq, "action": action,
                                    **{k: v for k, v in payload.items()
                                       if k != "step"}},
                                   session=session_id)
        return delta

    def chat_post(self, actor: str, session_id: str, text: str) -> SyncDelta:
        session = self._session(session_id)
        with session.mutex:
            if actor not in session.present:
                raise ValidationError("not present in session")
            trimmed = (text or "").strip()
            if not trimmed:
                raise ValidationError("chat text must not be empty")
            if len(trimmed) > CHAT_LIMIT:
                raise ValidationError(
                    f"chat text exceeds {CHAT_LIMIT} characters")
            message = ChatMessage(seq=session.seq + 1, author=actor,
                                  author_name=session.present[actor].username,
                                  text=trimmed, timestamp=utc_now_iso())
            session.chat.append(message)
            delta = self._emit(session, CHAT, message.to_obj(), author=actor)
        self.store.append_activity(actor, "chat",
                                   {"seq": delta.seq, "length": len(trimmed)},
                                   session=session_id)
        return delta

    def base_doc(self, session_id: str) -> ConstructionDocument:
        session = self._session(session_id)
        with session.mutex:
            return session.base_doc

    def delta_log(self, session_id: str) -> list[SyncDelta]:
        session = self._session(session_id)
        with session.mutex:
            return list(session.delta_log)

    def lock_state(self, session_id: str) -> dict[str, Any]:
        session = self._session(session_id)
        with session.mutex:
            return session.lock.to_obj()

    def present_users(self, session_id: str) -> list[str]:
        session = self._session(session_id)
        with session.mutex:
            return list(session.present)

    def current_seq(self, session_id: str) -> int:
        session = self._session(session_id)
        with session.mutex:
            return session.seq
