// The full-duplex session channel. Wraps a browser-compatible WebSocket;
// anything with send/close and the usual event callbacks fits, so the node
// test harness can plug in "ws".

import { EditAction, PROTOCOL_VERSION, ServerMessage } from "./protocol.js";

export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: ((event: unknown) => void) | null;
  onerror: ((event: unknown) => void) | null;
}

export type ChannelHandler = (message: ServerMessage) => void;

export class SessionChannel {
  private ready = false;
  private queue: string[] = [];
  private heartbeatTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private ws: WebSocketLike,
    private token: string,
    private handler: ChannelHandler,
    heartbeatSeconds = 10,
  ) {
    ws.onmessage = (event) => {
      const message = JSON.parse(String(event.data)) as ServerMessage;
      if (message.type === "hello") {
        if (message.protocol_version !== PROTOCOL_VERSION) {
          this.handler({
            type: "error",
            code: "VALIDATION",
            message: `protocol version mismatch: server ${message.protocol_version}`,
          });
          this.close();
          return;
        }
        this.ready = true;
        for (const item of this.queue.splice(0)) this.ws.send(item);
      }
      this.handler(message);
    };
    ws.onclose = () => this.stopHeartbeat();
    if (heartbeatSeconds > 0) {
      this.heartbeatTimer = setInterval(
        () => this.send({ type: "heartbeat" }),
        heartbeatSeconds * 1000,
      );
    }
  }

  private stopHeartbeat(): void {
    if (this.heartbeatTimer !== null) {
      clearInterval(this.heartbeatTimer);
      this.heartbeatTimer = null;
    }
  }

  send(message: Record<string, unknown>): void {
    const data = JSON.stringify({ ...message, token: this.token });
    if (this.ready) this.ws.send(data);
    else this.queue.push(data);
  }

  join(sessionId: string): void {
    this.send({ type: "join", session_id: sessionId });
  }

  leave(): void {
    this.send({ type: "leave" });
  }

  requestLock(): void {
    this.send({ type: "lock-request" });
  }

  releaseLock(): void {
    this.send({ type: "lock-release" });
  }

  forceTransfer(to: string): void {
    this.send({ type: "force-transfer", to });
  }

  edit(action: EditAction): void {
    this.send({ type: "edit", edit: action });
  }

  chat(text: string): void {
    this.send({ type: "chat", text });
  }

  requestSnapshot(): void {
    this.send({ type: "snapshot-request" });
  }

  close(): void {
    this.stopHeartbeat();
    this.ws.close();
  }
}
