// The laboratory UI: login, scrapbook browser, group session view with the
// synchronized shared pane and the private sandbox pane, chat, lock controls
// and the teacher dashboard.

import { ApiClient, ApiFailure } from "./api.js";
import { SessionChannel } from "./channel.js";
import {
  ConstructionDocument,
  StepKind,
  addStep,
  docFromObj,
  docToObj,
  emptyDocument,
  evaluate,
  removeStep,
  resultSort,
  stepById,
} from "./kernel.js";
import { setLocale, t } from "./i18n.js";
import {
  ConstructionMetaWire,
  EditAction,
  ServerMessage,
  SnapshotMessage,
} from "./protocol.js";
import { Replica } from "./replica.js";
import { Scene, Viewport, buildScene, hitTest, paint, toWorld } from "./render.js";

const DRAG_INTERVAL_MS = 34; // <= 30 edit messages per second on the wire

type Tool = "move" | "point" | "line" | "circle" | "midpoint" | "perp" | "parallel"
  | "intersect" | "delete";

interface SessionSummary {
  session_id: string;
  group_id: string;
  construction_id: string;
  seq: number;
  lock: { holder: string | null; queue: string[] };
  present: { user_id: string; username: string; observer: boolean }[];
  started_by: string;
}

interface PaneHooks {
  doc(): ConstructionDocument;
  submit(action: EditAction): void;
  editable(): boolean;
  blockedHint(): string | null;
}

class CanvasPane {
  viewport: Viewport;
  scene: Scene = { commands: [], diagnostics: [] };
  tool: Tool = "move";
  picks: number[] = [];
  dragging: number | null = null;
  private lastDragAt = 0;

  constructor(
    private canvas: HTMLCanvasElement,
    private diagnosticsEl: HTMLElement,
    private hooks: PaneHooks,
    private hintEl: HTMLElement | null = null,
  ) {
    this.viewport = {
      width: canvas.width, height: canvas.height,
      centerX: 0, centerY: 0, scale: 40,
    };
    canvas.addEventListener("pointerdown", (e) => this.pointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.pointerMove(e));
    canvas.addEventListener("pointerup", () => (this.dragging = null));
    canvas.addEventListener("pointerleave", () => (this.dragging = null));
  }

  render(): void {
    const doc = this.hooks.doc();
    this.scene = buildScene(doc, evaluate(doc), this.viewport);
    const ctx = this.canvas.getContext("2d");
    if (ctx) paint(ctx, this.viewport, this.scene,
                   this.picks.length ? this.picks[this.picks.length - 1] : null);
    this.diagnosticsEl.textContent = this.scene.diagnostics.length
      ? `${t("undefinedSteps")}: ${this.scene.diagnostics.join(" | ")}`
      : "";
  }

  private local(e: PointerEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    return [e.clientX - rect.left, e.clientY - rect.top];
  }

  private hint(text: string | null): void {
    if (this.hintEl) this.hintEl.textContent = text ?? "";
  }

  private pointerDown(e: PointerEvent): void {
    const [sx, sy] = this.local(e);
    if (!this.hooks.editable()) {
      this.hint(this.hooks.blockedHint());
      return;
    }
    this.hint(null);
    const doc = this.hooks.doc();
    if (this.tool === "move") {
      const id = hitTest(this.scene, sx, sy, 12, true);
      if (id !== null && stepById(doc, id)?.kind === "FreePoint") this.dragging = id;
      return;
    }
    if (this.tool === "point") {
      const [wx, wy] = toWorld(this.viewport, sx, sy);
      this.hooks.submit({ action: "add-step",
                          step: { kind: "FreePoint", x: wx, y: wy, args: [] } });
      return;
    }
    if (this.tool === "delete") {
      const id = hitTest(this.scene, sx, sy);
      if (id !== null) this.hooks.submit({ action: "remove-step", id, cascade: true });
      return;
    }
    const id = hitTest(this.scene, sx, sy);
    if (id === null) return;
    this.picks.push(id);
    this.applyPicks(doc);
    this.render();
  }

  private applyPicks(doc: ConstructionDocument): void {
    const wantTwoPoints: Partial<Record<Tool, StepKind>> = {
      line: "LineThroughPoints", circle: "CircleCenterPoint", midpoint: "Midpoint",
    };
    const sortOf = (id: number) => {
      const step = stepById(doc, id);
      return step ? resultSort(step.kind) : null;
    };
    if (this.tool in wantTwoPoints) {
      this.picks = this.picks.filter((p) => sortOf(p) === "point");
      if (this.picks.length >= 2 && this.picks[0] !== this.picks[1]) {
        this.hooks.submit({ action: "add-step",
                            step: { kind: wantTwoPoints[this.tool]!,
                                    args: this.picks.slice(0, 2) } });
      }
      if (this.picks.length >= 2) this.picks = [];
      return;
    }
    if (this.tool === "perp" || this.tool === "parallel") {
      if (this.picks.length === 1 && sortOf(this.picks[0]) !== "line") this.picks = [];
      if (this.picks.length >= 2) {
        if (sortOf(this.picks[1]) === "point") {
          this.hooks.submit({ action: "add-step",
                              step: { kind: this.tool === "perp" ? "PerpendicularThrough"
                                                                  : "ParallelThrough",
                                      args: this.picks.slice(0, 2) } });
        }
        this.picks = [];
      }
      return;
    }
    if (this.tool === "intersect") {
      this.picks = this.picks.filter((p) => sortOf(p) !== "point");
      if (this.picks.length >= 2) {
        const [first, second] = this.picks;
        const sorts = [sortOf(first), sortOf(second)];
        if (first !== second) {
          if (sorts[0] === "line" && sorts[1] === "line") {
            this.hooks.submit({ action: "add-step",
                                step: { kind: "IntersectLineLine", args: [first, second] } });
          } else {
            const [line, circle] = sorts[0] === "line" ? [first, second] : [second, first];
            const kind: StepKind = sorts[0] === "circle" && sorts[1] === "circle"
              ? "IntersectCircleCircle" : "IntersectLineCircle";
            const args = kind === "IntersectLineCircle" ? [line, circle] : [first, second];
            this.hooks.submit({ action: "add-step", step: { kind, args, branch: 0 } });
            this.hooks.submit({ action: "add-step", step: { kind, args, branch: 1 } });
          }
        }
        this.picks = [];
      }
    }
  }

  private pointerMove(e: PointerEvent): void {
    if (this.dragging === null || !this.hooks.editable()) return;
    const now = performance.now();
    if (now - this.lastDragAt < DRAG_INTERVAL_MS) return;
    this.lastDragAt = now;
    const [sx, sy] = this.local(e);
    const [wx, wy] = toWorld(this.viewport, sx, sy);
    this.hooks.submit({ action: "drag", id: this.dragging, x: wx, y: wy });
  }
}

class App {
  api = new ApiClient("");
  userId = "";
  role = "";
  username = "";
  root: HTMLElement;

  // session state
  channel: SessionChannel | null = null;
  replica = new Replica();
  sessionId: string | null = null;
  sharedPane: CanvasPane | null = null;
  sandboxPane: CanvasPane | null = null;
  sandboxDoc: ConstructionDocument = emptyDocument();

  constructor(root: HTMLElement) {
    this.root = root;
    this.renderLogin();
  }

  el<K extends keyof HTMLElementTagNameMap>(tag: K, attrs: Record<string, string> = {},
                                            text = ""): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
    if (text) node.textContent = text;
    return node;
  }

  // -- login ----------------------------------------------------------------

  renderLogin(): void {
    this.root.innerHTML = "";
    const form = this.el("form", { class: "login" });
    const user = this.el("input", { placeholder: t("username"), autocomplete: "username" });
    const pass = this.el("input", { placeholder: t("password"), type: "password" });
    const button = this.el("button", { type: "submit" }, t("login"));
    const error = this.el("div", { class: "error" });
    form.append(this.el("h1", {}, "Geometry Laboratory"), user, pass, button, error);
    form.addEventListener("submit", async (e) => {
      e.preventDefault();
      try {
        const payload = await this.api.login(user.value, pass.value);
        this.userId = payload.user_id;
        this.role = payload.role;
        this.username = user.value;
        setLocale(payload.locale);
        this.renderMain();
      } catch (err) {
        error.textContent = err instanceof ApiFailure ? `${err.code}: ${err.message}`
                                                      : String(err);
      }
    });
    this.root.append(form);
  }

  // -- main layout -----------------------------------------------------------

  renderMain(): void {
    this.root.innerHTML = "";
    const bar = this.el("nav");
    const views: [string, () => void][] = [
      [t("scrapbook"), () => this.renderScrapbook()],
      [t("session"), () => this.renderSessionPicker()],
    ];
    if (this.role === "teacher") views.push([t("dashboard"), () => this.renderDashboard()]);
    for (const [label, go] of views) {
      const button = this.el("button", {}, label);
      button.addEventListener("click", go);
      bar.append(button);
    }
    bar.append(this.el("span", { class: "who" }, `${this.username} (${this.role})`));
    const main = this.el("main", { id: "view" });
    this.root.append(bar, main);
    this.renderScrapbook();
  }

  view(): HTMLElement {
    const main = document.getElementById("view")!;
    main.innerHTML = "";
    return main;
  }

  // -- scrapbook ---------------------------------------------------------------

  async renderScrapbook(): Promise<void> {
    const main = this.view();
    const heading = this.el("h2", {}, t("scrapbook"));
    const table = this.el("table");
    main.append(heading, table);
    const { constructions } = await this.api.call<{ constructions: ConstructionMetaWire[] }>(
      "construction-list");
    for (const meta of constructions) {
      const row = this.el("tr");
      row.append(
        this.el("td", {}, meta.name),
        this.el("td", {}, meta.permissions),
        this.el("td", {}, `rev ${meta.revision}`),
        this.el("td", {}, meta.owner === this.userId ? "mine" : "shared"),
      );
      const open = this.el("button", {}, "open in sandbox");
      open.addEventListener("click", async () => {
        const loaded = await this.api.call<{ doc: unknown }>(
          "construction-load", { construction_id: meta.construction_id });
        this.sandboxDoc = docFromObj(loaded.doc);
        this.renderSessionPicker();
      });
      const cell = this.el("td");
      cell.append(open);
      row.append(cell);
      table.append(row);
    }
  }

  // -- session picker ---------------------------------------------------------

  async renderSessionPicker(): Promise<void> {
    const main = this.view();
    main.append(this.el("h2", {}, t("session")));
    const live = this.el("div");
    main.append(live);
    const { sessions } = await this.api.call<{ sessions: SessionSummary[] }>("session-list");
    for (const session of sessions) {
      const row = this.el("div", { class: "live" },
                          `session ${session.session_id} seq=${session.seq} `);
      const join = this.el("button", {}, "join");
      join.addEventListener("click", () => this.enterSession(session.session_id));
      row.append(join);
      live.append(row);
    }
    const opener = this.el("div");
    opener.append(this.el("p", {}, "Start a session on a group-attached construction:"));
    const { constructions } = await this.api.call<{ constructions: ConstructionMetaWire[] }>(
      "construction-list");
    for (const meta of constructions.filter((m) => m.attached_groups.length)) {
      for (const gid of meta.attached_groups) {
        const button = this.el("button", {}, `${meta.name} @ ${gid}`);
        button.addEventListener("click", async () => {
          const opened = await this.api.call<{ session_id: string }>(
            "session-open", { group_id: gid, construction_id: meta.construction_id });
          this.enterSession(opened.session_id);
        });
        opener.append(button);
      }
    }
    main.append(opener);
  }

  // -- the session view ----------------------------------------------------------

  enterSession(sessionId: string): void {
    const main = this.view();
    this.sessionId = sessionId;
    this.replica = new Replica();

    const layout = this.el("div", { class: "session" });
    const sharedBox = this.el("section");
    sharedBox.append(this.el("h3", {}, t("shared")));
    const lockRow = this.el("div", { class: "lockrow" });
    const lockButton = this.el("button", {}, t("requestLock"));
    const lockInfo = this.el("span");
    lockRow.append(lockButton, lockInfo);
    const sharedTools = this.el("div", { class: "tools" });
    const sharedCanvas = this.el("canvas", { width: "520", height: "380" });
    const sharedDiag = this.el("div", { class: "diag" });
    const sharedHint = this.el("div", { class: "hint" });
    sharedBox.append(lockRow, sharedTools, sharedCanvas, sharedHint, sharedDiag);

    const sandboxBox = this.el("section");
    sandboxBox.append(this.el("h3", {}, t("sandbox")));
    const sandboxTools = this.el("div", { class: "tools" });
    const sandboxCanvas = this.el("canvas", { width: "520", height: "380" });
    const sandboxDiag = this.el("div", { class: "diag" });
    const saveButton = this.el("button", {}, t("saveSandbox"));
    sandboxBox.append(sandboxTools, sandboxCanvas, sandboxDiag, saveButton);

    const side = this.el("aside");
    const presenceEl = this.el("div", { class: "presence" });
    const chatLog = this.el("div", { class: "chatlog" });
    const chatForm = this.el("form");
    const chatInput = this.el("input", { placeholder: t("chat"), maxlength: "2000" });
    chatForm.append(chatInput);
    side.append(presenceEl, this.el("h3", {}, t("chat")), chatLog, chatForm);

    layout.append(sharedBox, sandboxBox, side);
    main.append(layout);

    const holderName = () => {
      const holder = this.replica.lockHolder;
      if (!holder) return null;
      return this.replica.present.get(holder)?.username ?? holder;
    };

    this.sharedPane = new CanvasPane(sharedCanvas, sharedDiag, {
      doc: () => this.replica.doc,
      submit: (action) => this.channel?.edit(action),
      editable: () => this.replica.lockHolder === this.userId,
      blockedHint: () => holderName() ? `${t("holder")} ${holderName()}` : t("requestLock"),
    }, sharedHint);
    this.sandboxPane = new CanvasPane(sandboxCanvas, sandboxDiag, {
      doc: () => this.sandboxDoc,
      submit: (action) => {
        if (action.action === "add-step") {
          this.sandboxDoc = addStep(this.sandboxDoc,
                                    action.step as never);
        } else if (action.action === "remove-step") {
          this.sandboxDoc = removeStep(this.sandboxDoc, action.id, action.cascade);
        } else {
          this.sandboxDoc = { ...this.sandboxDoc,
            steps: this.sandboxDoc.steps.map((s) =>
              s.id === action.id ? { ...s, x: action.x, y: action.y } : s) };
        }
        this.sandboxPane?.render();
      },
      editable: () => true,
      blockedHint: () => null,
    });

    const toolNames: Tool[] = ["move", "point", "line", "circle", "midpoint",
                               "perp", "parallel", "intersect", "delete"];
    for (const [toolbar, pane] of [[sharedTools, this.sharedPane],
                                   [sandboxTools, this.sandboxPane]] as const) {
      for (const name of toolNames) {
        const button = this.el("button", {}, name);
        button.addEventListener("click", () => {
          pane.tool = name;
          pane.picks = [];
        });
        toolbar.append(button);
      }
    }

    const refresh = () => {
      this.sharedPane?.render();
      const holder = this.replica.lockHolder;
      const mine = holder === this.userId;
      const position = this.replica.queuePosition(this.userId);
      lockButton.textContent = mine ? t("releaseLock") : t("requestLock");
      lockInfo.textContent = mine ? t("youHold")
        : position !== null ? `${t("queued")} ${position}`
        : holder ? `${t("holder")} ${holderName()}` : "";
      presenceEl.textContent = [...this.replica.present.values()]
        .map((p) => p.observer ? `${p.username} (${t("observer")})` : p.username)
        .join(", ");
      chatLog.innerHTML = "";
      for (const message of this.replica.chat.slice(-50)) {
        chatLog.append(this.el("div", {}, `${message.author_name}: ${message.text}`));
      }
      chatLog.scrollTop = chatLog.scrollHeight;
    };

    const socket = new WebSocket(
      `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/channel`);
    this.channel = new SessionChannel(socket as never, this.api.token!, (message) => {
      this.onChannelMessage(message, refresh);
    });
    this.channel.join(sessionId);

    lockButton.addEventListener("click", () => {
      if (this.replica.lockHolder === this.userId) this.channel?.releaseLock();
      else this.channel?.requestLock();
    });
    chatForm.addEventListener("submit", (e) => {
      e.preventDefault();
      if (chatInput.value.trim()) this.channel?.chat(chatInput.value);
      chatInput.value = "";
    });
    saveButton.addEventListener("click", async () => {
      const name = prompt("name?", "sandbox") ?? "sandbox";
      await this.api.call("construction-save",
                          { name, doc: docToObj(this.sandboxDoc) });
    });
    this.sandboxPane.render();
    refresh();
  }

  onChannelMessage(message: ServerMessage, refresh: () => void): void {
    if (message.type === "snapshot") {
      this.replica.applySnapshot(message as SnapshotMessage);
      refresh();
      return;
    }
    if (message.type === "delta") {
      this.replica.applyDelta(message);
      if (this.replica.wantsSnapshot()) this.channel?.requestSnapshot();
      if (this.replica.closed) {
        this.channel?.close();
        this.channel = null;
      }
      refresh();
      return;
    }
    if (message.type === "error") {
      const hint = document.querySelector(".hint");
      if (hint) hint.textContent = `${message.code}: ${message.message}`;
    }
  }

  // -- teacher dashboard -----------------------------------------------------------

  async renderDashboard(): Promise<void> {
    const main = this.view();
    main.append(this.el("h2", {}, t("dashboard")));
    const { sessions } = await this.api.call<{ sessions: SessionSummary[] }>("session-list");
    for (const session of sessions) {
      const card = this.el("div", { class: "card" });
      card.append(this.el("h3", {}, `session ${session.session_id}`));
      card.append(this.el("div", {},
        `holder: ${session.lock.holder ?? "-"} | queue: ${session.lock.queue.join(", ") || "-"}`));
      card.append(this.el("div", {},
        `present: ${session.present.map((p) => p.username).join(", ") || "-"}`));
      const observe = this.el("button", {}, "observe live");
      observe.addEventListener("click", () => this.enterSession(session.session_id));
      const select = this.el("select");
      for (const p of session.present.filter((x) => !x.observer)) {
        select.append(this.el("option", { value: p.user_id }, p.username));
      }
      const transfer = this.el("button", {}, t("forceTransfer"));
      transfer.addEventListener("click", () => {
        if (this.channel && this.sessionId === session.session_id && select.value) {
          this.channel.forceTransfer(select.value);
        }
      });
      card.append(observe, select, transfer);
      main.append(card);
    }
  }
}

export function start(): void {
  const root = document.getElementById("app");
  if (root) new App(root);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  start();
}
