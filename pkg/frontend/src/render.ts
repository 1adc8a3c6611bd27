// Scene building: evaluation -> drawable commands in screen space. Pure, so
// the headless tests can assert geometry without a canvas; painting is a thin
// pass over the command list.

import { ConstructionDocument, Evaluation, GeometricValue, labelOf } from "./kernel.js";

export interface Viewport {
  width: number;
  height: number;
  centerX: number; // world coords at the canvas center
  centerY: number;
  scale: number; // pixels per world unit
}

export type DrawCommand =
  | { kind: "point"; x: number; y: number; label: string; free: boolean; id: number }
  | { kind: "segment"; x1: number; y1: number; x2: number; y2: number; id: number }
  | { kind: "circle"; x: number; y: number; r: number; id: number };

export interface Scene {
  commands: DrawCommand[];
  diagnostics: string[]; // undefined steps, listed instead of drawn
}

export function toScreen(viewport: Viewport, wx: number, wy: number): [number, number] {
  return [
    viewport.width / 2 + (wx - viewport.centerX) * viewport.scale,
    viewport.height / 2 - (wy - viewport.centerY) * viewport.scale,
  ];
}

export function toWorld(viewport: Viewport, sx: number, sy: number): [number, number] {
  return [
    viewport.centerX + (sx - viewport.width / 2) / viewport.scale,
    viewport.centerY - (sy - viewport.height / 2) / viewport.scale,
  ];
}

export function buildScene(
  doc: ConstructionDocument,
  values: Evaluation,
  viewport: Viewport,
): Scene {
  const commands: DrawCommand[] = [];
  const diagnostics: string[] = [];
  const diagonalWorld = Math.hypot(viewport.width, viewport.height) / viewport.scale;
  for (const step of doc.steps) {
    const value = values.get(step.id) as GeometricValue | undefined;
    if (!value) continue;
    if (value.type === "undefined") {
      diagnostics.push(`${labelOf(step)}: ${value.reason}`);
      continue;
    }
    if (value.type === "point") {
      const [sx, sy] = toScreen(viewport, value.x, value.y);
      commands.push({
        kind: "point", x: sx, y: sy, label: labelOf(step),
        free: step.kind === "FreePoint", id: step.id,
      });
    } else if (value.type === "line") {
      // span far past the viewport; the canvas clips the overhang
      const d = value.a * viewport.centerX + value.b * viewport.centerY + value.c;
      const footX = viewport.centerX - d * value.a;
      const footY = viewport.centerY - d * value.b;
      const ux = -value.b;
      const uy = value.a;
      const reach = diagonalWorld;
      const [x1, y1] = toScreen(viewport, footX - reach * ux, footY - reach * uy);
      const [x2, y2] = toScreen(viewport, footX + reach * ux, footY + reach * uy);
      commands.push({ kind: "segment", x1, y1, x2, y2, id: step.id });
    } else {
      const [sx, sy] = toScreen(viewport, value.cx, value.cy);
      commands.push({ kind: "circle", x: sx, y: sy, r: value.r * viewport.scale, id: step.id });
    }
  }
  return { commands, diagnostics };
}

/** Nearest step id whose rendered shape is within `radius` pixels. */
export function hitTest(
  scene: Scene,
  sx: number,
  sy: number,
  radius = 12,
  pointsOnly = false,
): number | null {
  let best: number | null = null;
  let bestDistance = radius;
  for (const command of scene.commands) {
    let distance: number;
    if (command.kind === "point") {
      distance = Math.hypot(command.x - sx, command.y - sy);
    } else if (pointsOnly) {
      continue;
    } else if (command.kind === "circle") {
      distance = Math.abs(Math.hypot(command.x - sx, command.y - sy) - command.r);
    } else {
      const vx = command.x2 - command.x1;
      const vy = command.y2 - command.y1;
      const len2 = vx * vx + vy * vy;
      const t = len2 === 0 ? 0 :
        Math.max(0, Math.min(1, ((sx - command.x1) * vx + (sy - command.y1) * vy) / len2));
      distance = Math.hypot(command.x1 + t * vx - sx, command.y1 + t * vy - sy);
    }
    if (distance < bestDistance) {
      bestDistance = distance;
      best = command.id;
    }
  }
  return best;
}

export interface Paintable {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: unknown;
  fillStyle: unknown;
  lineWidth: number;
  font: string;
}

export function paint(ctx: Paintable, viewport: Viewport, scene: Scene,
                      highlight: number | null = null): void {
  ctx.clearRect(0, 0, viewport.width, viewport.height);
  ctx.font = "12px sans-serif";
  for (const command of scene.commands) {
    const hot = command.id === highlight;
    if (command.kind === "segment") {
      ctx.strokeStyle = hot ? "#d9480f" : "#1c3d6e";
      ctx.lineWidth = hot ? 2.5 : 1.5;
      ctx.beginPath();
      ctx.moveTo(command.x1, command.y1);
      ctx.lineTo(command.x2, command.y2);
      ctx.stroke();
    } else if (command.kind === "circle") {
      ctx.strokeStyle = hot ? "#d9480f" : "#2b6e3f";
      ctx.lineWidth = hot ? 2.5 : 1.5;
      ctx.beginPath();
      ctx.arc(command.x, command.y, command.r, 0, Math.PI * 2);
      ctx.stroke();
    }
  }
  for (const command of scene.commands) {
    if (command.kind !== "point") continue;
    const hot = command.id === highlight;
    ctx.fillStyle = hot ? "#d9480f" : command.free ? "#b02a2a" : "#333333";
    ctx.beginPath();
    ctx.arc(command.x, command.y, command.free ? 5 : 3.5, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillText(command.label, command.x + 7, command.y - 7);
  }
}
