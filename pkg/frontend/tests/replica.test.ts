import { describe, expect, it } from "vitest";

import { canonicalSerialize } from "../src/kernel.js";
import { DeltaMessage, SnapshotMessage } from "../src/protocol.js";
import { Replica } from "../src/replica.js";

function snapshot(seq: number): SnapshotMessage {
  return {
    type: "snapshot",
    session_id: "s_1",
    group_id: "g_1",
    construction_id: "c_1",
    seq,
    doc: {
      format_version: 1,
      steps: [
        { id: 0, kind: "FreePoint", args: [], x: 0.0, y: 0.0, label: "A" },
        { id: 1, kind: "FreePoint", args: [], x: 2.0, y: 0.0, label: "B" },
      ],
    },
    lock: { holder: null, queue: [] },
    present: [{ user_id: "u_1", username: "ana", observer: false }],
    chat: [],
    started_by: "u_1",
  };
}

function delta(seq: number, kind: DeltaMessage["kind"],
               payload: Record<string, unknown>): DeltaMessage {
  return { type: "delta", session_id: "s_1", seq, kind, payload, author: "u_1" };
}

describe("replica delta application", () => {
  it("applies consecutive deltas and tracks state", () => {
    const replica = new Replica();
    replica.applySnapshot(snapshot(3));
    expect(replica.lastSeq).toBe(3);
    expect(replica.applyDelta(delta(4, "add-step", {
      step: { id: 2, kind: "Midpoint", args: [0, 1], label: "M" },
    }))).toBe(true);
    expect(replica.applyDelta(delta(5, "drag", { id: 1, x: 4.0, y: 0.0 }))).toBe(true);
    expect(replica.applyDelta(delta(6, "lock-changed",
                                    { holder: "u_1", queue: ["u_2"], reason: "grant" })))
      .toBe(true);
    expect(replica.lockHolder).toBe("u_1");
    expect(replica.queuePosition("u_2")).toBe(1);
    expect(replica.doc.steps.length).toBe(3);
    expect(canonicalSerialize(replica.doc)).toContain('"x":4.0');
  });

  it("ignores duplicates", () => {
    const replica = new Replica();
    replica.applySnapshot(snapshot(3));
    const message = delta(4, "chat", { seq: 4, author: "u_1", author_name: "ana",
                                       text: "hi", timestamp: "t" });
    expect(replica.applyDelta(message)).toBe(true);
    expect(replica.applyDelta(message)).toBe(false);
    expect(replica.chat.length).toBe(1);
  });

  it("requests exactly one snapshot per gap", () => {
    const replica = new Replica();
    replica.applySnapshot(snapshot(0));
    expect(replica.applyDelta(delta(2, "drag", { id: 0, x: 1, y: 1 }))).toBe(false);
    expect(replica.gapped).toBe(true);
    expect(replica.wantsSnapshot()).toBe(true);
    expect(replica.wantsSnapshot()).toBe(false);
    // deltas during the gap are ignored
    expect(replica.applyDelta(delta(3, "drag", { id: 0, x: 2, y: 2 }))).toBe(false);
    replica.applySnapshot(snapshot(5));
    expect(replica.gapped).toBe(false);
    expect(replica.snapshotRequests).toBe(1);
    expect(replica.applyDelta(delta(6, "drag", { id: 1, x: 9, y: 9 }))).toBe(true);
  });

  it("handles presence and close", () => {
    const replica = new Replica();
    replica.applySnapshot(snapshot(0));
    replica.applyDelta(delta(1, "presence", {
      event: "join", user: { user_id: "u_2", username: "bruno", observer: false },
    }));
    expect(replica.present.size).toBe(2);
    replica.applyDelta(delta(2, "presence", {
      event: "leave", user: { user_id: "u_2", username: "bruno", observer: false },
    }));
    expect(replica.present.size).toBe(1);
    replica.applyDelta(delta(3, "closed", { persisted: true, revision: 2 }));
    expect(replica.closed).toBe(true);
  });
});
