// Wire protocol types. Version-checked at the channel handshake; no private
// endpoints beyond these.

export const PROTOCOL_VERSION = 1;

export type ErrorCode = "AUTH" | "PERM" | "NOTFOUND" | "CONFLICT" | "VALIDATION" | "LOCK" | "INTERNAL";

export interface ApiError {
  code: ErrorCode;
  message: string;
  current_revision?: number;
}

export interface ApiResponse<T = Record<string, unknown>> {
  ok: boolean;
  correlation_id: string | null;
  payload?: T;
  error?: ApiError;
}

export interface ConstructionMetaWire {
  construction_id: string;
  owner: string;
  name: string;
  permissions: string;
  attached_groups: string[];
  created_at: string;
  modified_at: string;
  revision: number;
}

export interface LockWire {
  holder: string | null;
  queue: string[];
}

export interface PresenceWire {
  user_id: string;
  username: string;
  observer: boolean;
}

export interface ChatWire {
  seq: number;
  author: string;
  author_name: string;
  text: string;
  timestamp: string;
}

export interface SnapshotMessage {
  type: "snapshot";
  session_id: string;
  group_id: string;
  construction_id: string;
  seq: number;
  doc: unknown;
  lock: LockWire;
  present: PresenceWire[];
  chat: ChatWire[];
  started_by: string;
}

export type DeltaKind =
  | "add-step"
  | "remove-step"
  | "drag"
  | "lock-changed"
  | "chat"
  | "presence"
  | "closed";

export interface DeltaMessage {
  type: "delta";
  session_id: string;
  seq: number;
  kind: DeltaKind;
  payload: Record<string, unknown>;
  author: string;
}

export interface ErrorMessage {
  type: "error";
  code: ErrorCode;
  message: string;
}

export type ServerMessage =
  | SnapshotMessage
  | DeltaMessage
  | ErrorMessage
  | { type: "hello"; protocol_version: number; version: string }
  | { type: "heartbeat-ack" }
  | { type: "lock-result"; outcome: "granted" | "queued"; position: number | null }
  | { type: "left" };

export type EditAction =
  | { action: "add-step"; step: Record<string, unknown> }
  | { action: "remove-step"; id: number; cascade: boolean }
  | { action: "drag"; id: number; x: number; y: number };
