// Session replica: applies deltas only in consecutive seq order; a gap makes
// it request exactly one snapshot and ignore deltas until the snapshot lands.

import {
  ConstructionDocument,
  ConstructionStep,
  appendStep,
  applyDrag,
  docFromObj,
  emptyDocument,
  removeStep,
} from "./kernel.js";
import { ChatWire, DeltaMessage, LockWire, PresenceWire, SnapshotMessage } from "./protocol.js";

export class Replica {
  doc: ConstructionDocument = emptyDocument();
  lastSeq = -1;
  lockHolder: string | null = null;
  lockQueue: string[] = [];
  present = new Map<string, PresenceWire>();
  chat: ChatWire[] = [];
  closed = false;
  private awaitingSnapshot = false;
  private snapshotRequested = false;
  snapshotRequests = 0;

  applySnapshot(snapshot: SnapshotMessage): void {
    this.doc = docFromObj(snapshot.doc);
    this.lastSeq = snapshot.seq;
    this.lockHolder = snapshot.lock.holder;
    this.lockQueue = [...snapshot.lock.queue];
    this.present = new Map(snapshot.present.map((p) => [p.user_id, p]));
    this.chat = [...snapshot.chat];
    this.awaitingSnapshot = false;
    this.snapshotRequested = false;
  }

  /** True exactly once per detected gap, until a snapshot arrives. */
  wantsSnapshot(): boolean {
    if (this.awaitingSnapshot && !this.snapshotRequested) {
      this.snapshotRequested = true;
      this.snapshotRequests += 1;
      return true;
    }
    return false;
  }

  get gapped(): boolean {
    return this.awaitingSnapshot;
  }

  applyDelta(message: DeltaMessage): boolean {
    if (this.awaitingSnapshot) return false;
    if (message.seq <= this.lastSeq) return false; // duplicate
    if (message.seq > this.lastSeq + 1) {
      this.awaitingSnapshot = true;
      this.snapshotRequested = false;
      return false;
    }
    const payload = message.payload;
    switch (message.kind) {
      case "add-step":
        this.doc = appendStep(this.doc, payload.step as unknown as ConstructionStep);
        break;
      case "remove-step":
        this.doc = removeStep(this.doc, payload.id as number, payload.cascade as boolean);
        break;
      case "drag":
        this.doc = applyDrag(this.doc, payload.id as number,
                             payload.x as number, payload.y as number);
        break;
      case "lock-changed": {
        const lock = payload as unknown as LockWire;
        this.lockHolder = lock.holder;
        this.lockQueue = [...lock.queue];
        break;
      }
      case "chat":
        this.chat.push(payload as unknown as ChatWire);
        break;
      case "presence": {
        const user = payload.user as PresenceWire;
        if (payload.event === "join") this.present.set(user.user_id, user);
        else this.present.delete(user.user_id);
        break;
      }
      case "closed":
        this.closed = true;
        break;
    }
    this.lastSeq = message.seq;
    return true;
  }

  queuePosition(userId: string): number | null {
    const index = this.lockQueue.indexOf(userId);
    return index === -1 ? null : index + 1;
  }
}
