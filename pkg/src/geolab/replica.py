"""Client-side session replica: consecutive-seq delta application with gap
detection and snapshot recovery.

Mirrors the protocol contract the web client implements; the test suite uses
it to assert convergence between server and participants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .kernel import (
    ConstructionDocument,
    append_step,
    apply_drag,
    doc_from_obj,
    remove_step,
    step_from_obj,
)

DOC_DELTAS = {"add-step", "remove-step", "drag"}


@dataclass
class Replica:
    doc: ConstructionDocument = field(default_factory=ConstructionDocument)
    last_seq: int = -1
    lock_holder: str | None = None
    lock_queue: list[str] = field(default_factory=list)
    present: dict[str, dict[str, Any]] = field(default_factory=dict)
    chat: list[dict[str, Any]] = field(default_factory=list)
    closed: bool = False
    awaiting_snapshot: bool = False
    snapshot_requests: int = 0
    ignored: int = 0

    def apply_snapshot(self, snapshot: dict[str, Any]) -> None:
        self.doc = doc_from_obj(snapshot["doc"])
        self.last_seq = snapshot["seq"]
        self.lock_holder = snapshot["lock"]["holder"]
        self.lock_queue = list(snapshot["lock"]["queue"])
        self.present = {p["user_id"]: p for p in snapshot.get("present", ())}
        self.chat = list(snapshot.get("chat", ()))
        self.awaiting_snapshot = False

    def wants_snapshot(self) -> bool:
        """True exactly once per detected gap until a snapshot arrives."""
        if self.awaiting_snapshot and self.snapshot_requests == 0:
            self.snapshot_requests += 1
            return True
        return False

    def apply_delta(self, message: dict[str, Any]) -> bool:
        """Apply one delta message; returns True if it advanced the replica."""
        seq = message["seq"]
        if self.awaiting_snapshot:
            self.ignored += 1
            return False
        if seq <= self.last_seq:
            self.ignored += 1  # duplicate
            return False
        if seq > self.last_seq + 1:
            self.awaiting_snapshot = True
            self.snapshot_requests = 0
            self.ignored += 1
            return False
        kind = message["kind"]
        payload = message["payload"]
        if kind == "add-step":
            self.doc = append_step(self.doc, step_from_obj(payload["step"]))
        elif kind == "remove-step":
            self.doc = remove_step(self.doc, payload["id"], payload["cascade"])
        elif kind == "drag":
            self.doc = apply_drag(self.doc, payload["id"],
                                  payload["x"], payload["y"])
        elif kind == "lock-changed":
            self.lock_holder = payload["holder"]
            self.lock_queue = list(payload["queue"])
        elif kind == "chat":
            self.chat.append(payload)
        elif kind == "presence":
            user = payload["user"]
            if payload["event"] == "join":
                self.present[user["user_id"]] = user
            else:
                self.present.pop(user["user_id"], None)
        elif kind == "closed":
            self.closed = True
        self.last_seq = seq
        return True
