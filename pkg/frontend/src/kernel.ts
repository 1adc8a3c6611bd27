// Client-side re-implementation of the construction kernel: evaluation for
// responsive rendering plus the canonical byte encoding. Parity with the
// server is enforced by the shared test-vector file (tests/kernel_parity).

export const EPSILON = 1e-9;

export type StepKind =
  | "FreePoint"
  | "Midpoint"
  | "LineThroughPoints"
  | "PerpendicularThrough"
  | "ParallelThrough"
  | "CircleCenterPoint"
  | "IntersectLineLine"
  | "IntersectLineCircle"
  | "IntersectCircleCircle";

export interface ConstructionStep {
  id: number;
  kind: StepKind;
  args: number[];
  x?: number;
  y?: number;
  branch?: 0 | 1;
  label?: string;
}

export interface ConstructionDocument {
  format_version: number;
  steps: ConstructionStep[];
}

export type Sort = "point" | "line" | "circle";

interface Signature {
  argSorts: Sort[];
  result: Sort;
  branched?: boolean;
}

export const SIGNATURES: Record<StepKind, Signature> = {
  FreePoint: { argSorts: [], result: "point" },
  Midpoint: { argSorts: ["point", "point"], result: "point" },
  LineThroughPoints: { argSorts: ["point", "point"], result: "line" },
  PerpendicularThrough: { argSorts: ["line", "point"], result: "line" },
  ParallelThrough: { argSorts: ["line", "point"], result: "line" },
  CircleCenterPoint: { argSorts: ["point", "point"], result: "circle" },
  IntersectLineLine: { argSorts: ["line", "line"], result: "point" },
  IntersectLineCircle: { argSorts: ["line", "circle"], result: "point", branched: true },
  IntersectCircleCircle: { argSorts: ["circle", "circle"], result: "point", branched: true },
};

export type GeometricValue =
  | { type: "point"; x: number; y: number }
  | { type: "line"; a: number; b: number; c: number }
  | { type: "circle"; cx: number; cy: number; r: number }
  | { type: "undefined"; reason: string };

export type Evaluation = Map<number, GeometricValue>;

export function emptyDocument(): ConstructionDocument {
  return { format_version: 1, steps: [] };
}

export function stepById(doc: ConstructionDocument, id: number): ConstructionStep | undefined {
  return doc.steps.find((s) => s.id === id);
}

export function nextId(doc: ConstructionDocument): number {
  return doc.steps.length ? doc.steps[doc.steps.length - 1].id + 1 : 0;
}

export function resultSort(kind: StepKind): Sort {
  return SIGNATURES[kind].result;
}

// -- editing (value semantics: every operation returns a fresh document) ----

export function appendStep(doc: ConstructionDocument, step: ConstructionStep): ConstructionDocument {
  return { format_version: doc.format_version, steps: [...doc.steps, step] };
}

export function addStep(
  doc: ConstructionDocument,
  step: Omit<ConstructionStep, "id">,
): ConstructionDocument {
  return appendStep(doc, { ...step, id: nextId(doc) });
}

export function dependentClosure(doc: ConstructionDocument, id: number): Set<number> {
  const doomed = new Set<number>();
  for (const s of doc.steps) {
    if (s.id === id) continue;
    if (s.args.some((a) => a === id || doomed.has(a))) doomed.add(s.id);
  }
  return doomed;
}

export function removeStep(
  doc: ConstructionDocument,
  id: number,
  cascade: boolean,
): ConstructionDocument {
  if (!stepById(doc, id)) throw new Error(`unknown step id ${id}`);
  const doomed = dependentClosure(doc, id);
  if (doomed.size && !cascade) {
    throw new Error(`step ${id} has dependents (${[...doomed].sort((a, b) => a - b).join(", ")})`);
  }
  doomed.add(id);
  return { format_version: doc.format_version, steps: doc.steps.filter((s) => !doomed.has(s.id)) };
}

export function applyDrag(
  doc: ConstructionDocument,
  id: number,
  x: number,
  y: number,
): ConstructionDocument {
  const target = stepById(doc, id);
  if (!target) throw new Error(`unknown step id ${id}`);
  if (target.kind !== "FreePoint") throw new Error(`step ${id} is not draggable`);
  if (!Number.isFinite(x) || !Number.isFinite(y)) throw new Error("coordinates must be finite");
  return {
    format_version: doc.format_version,
    steps: doc.steps.map((s) => (s.id === id ? { ...s, x, y } : s)),
  };
}

// -- evaluation ---------------------------------------------------------------

function canonicalLine(a: number, b: number, c: number, eps: number): GeometricValue {
  const norm = Math.hypot(a, b);
  if (norm <= eps) return { type: "undefined", reason: "degenerate line direction" };
  a /= norm;
  b /= norm;
  c /= norm;
  if (a > eps) {
    // canonical already
  } else if (a < -eps || b < 0.0) {
    a = -a;
    b = -b;
    c = -c;
  }
  return { type: "line", a, b, c };
}

function lineThrough(x1: number, y1: number, x2: number, y2: number, eps: number): GeometricValue {
  if (Math.hypot(x2 - x1, y2 - y1) <= eps) return { type: "undefined", reason: "coincident points" };
  const a = y2 - y1;
  const b = x1 - x2;
  return canonicalLine(a, b, -(a * x1 + b * y1), eps);
}

function lineWithDirection(px: number, py: number, ux: number, uy: number, eps: number): GeometricValue {
  const a = uy;
  const b = -ux;
  return canonicalLine(a, b, -(a * px + b * py), eps);
}

type LineValue = Extract<GeometricValue, { type: "line" }>;
type CircleValue = Extract<GeometricValue, { type: "circle" }>;

export function lineDirection(line: LineValue): [number, number] {
  return [-line.b, line.a];
}

function intersectLineLine(l1: LineValue, l2: LineValue, eps: number): GeometricValue {
  const det = l1.a * l2.b - l2.a * l1.b;
  if (Math.abs(det) <= eps) return { type: "undefined", reason: "parallel" };
  return {
    type: "point",
    x: (l1.b * l2.c - l2.b * l1.c) / det,
    y: (l2.a * l1.c - l1.a * l2.c) / det,
  };
}

function intersectLineCircle(
  line: LineValue,
  circle: CircleValue,
  branch: 0 | 1,
  eps: number,
): GeometricValue {
  const d = line.a * circle.cx + line.b * circle.cy + line.c;
  const disc = circle.r * circle.r - d * d;
  if (disc < -eps) return { type: "undefined", reason: "line misses circle" };
  if (disc < eps) return { type: "undefined", reason: "tangency degenerate" };
  const h = Math.sqrt(disc);
  const fx = circle.cx - d * line.a;
  const fy = circle.cy - d * line.b;
  const [ux, uy] = lineDirection(line);
  return branch === 0
    ? { type: "point", x: fx - h * ux, y: fy - h * uy }
    : { type: "point", x: fx + h * ux, y: fy + h * uy };
}

function intersectCircleCircle(
  c1: CircleValue,
  c2: CircleValue,
  branch: 0 | 1,
  eps: number,
): GeometricValue {
  const dx = c2.cx - c1.cx;
  const dy = c2.cy - c1.cy;
  const d = Math.hypot(dx, dy);
  if (d <= eps) return { type: "undefined", reason: "concentric centers" };
  const a = (d * d + c1.r * c1.r - c2.r * c2.r) / (2.0 * d);
  const disc = c1.r * c1.r - a * a;
  if (disc < -eps) return { type: "undefined", reason: "circles do not intersect" };
  if (disc < eps) return { type: "undefined", reason: "tangency degenerate" };
  const h = Math.sqrt(disc);
  const ux = dx / d;
  const uy = dy / d;
  const mx = c1.cx + a * ux;
  const my = c1.cy + a * uy;
  const px = -uy;
  const py = ux;
  return branch === 0
    ? { type: "point", x: mx + h * px, y: my + h * py }
    : { type: "point", x: mx - h * px, y: my - h * py };
}

export function evaluate(doc: ConstructionDocument, eps: number = EPSILON): Evaluation {
  const values: Evaluation = new Map();
  for (const s of doc.steps) {
    const got = s.args.map((a) => values.get(a)!);
    const undef = s.args.find((a, i) => got[i].type === "undefined");
    if (undef !== undefined) {
      values.set(s.id, { type: "undefined", reason: `undefined argument ${undef}` });
      continue;
    }
    values.set(s.id, evaluateStep(s, got, eps));
  }
  return values;
}

function evaluateStep(s: ConstructionStep, got: GeometricValue[], eps: number): GeometricValue {
  switch (s.kind) {
    case "FreePoint":
      return { type: "point", x: s.x!, y: s.y! };
    case "Midpoint": {
      const [p, q] = got as Extract<GeometricValue, { type: "point" }>[];
      return { type: "point", x: (p.x + q.x) / 2.0, y: (p.y + q.y) / 2.0 };
    }
    case "LineThroughPoints": {
      const [p, q] = got as Extract<GeometricValue, { type: "point" }>[];
      return lineThrough(p.x, p.y, q.x, q.y, eps);
    }
    case "PerpendicularThrough": {
      const line = got[0] as LineValue;
      const t = got[1] as Extract<GeometricValue, { type: "point" }>;
      return lineWithDirection(t.x, t.y, line.a, line.b, eps);
    }
    case "ParallelThrough": {
      const line = got[0] as LineValue;
      const t = got[1] as Extract<GeometricValue, { type: "point" }>;
      const [ux, uy] = lineDirection(line);
      return lineWithDirection(t.x, t.y, ux, uy, eps);
    }
    case "CircleCenterPoint": {
      const [center, on] = got as Extract<GeometricValue, { type: "point" }>[];
      const r = Math.hypot(on.x - center.x, on.y - center.y);
      if (r <= eps) return { type: "undefined", reason: "zero radius" };
      return { type: "circle", cx: center.x, cy: center.y, r };
    }
    case "IntersectLineLine":
      return intersectLineLine(got[0] as LineValue, got[1] as LineValue, eps);
    case "IntersectLineCircle":
      return intersectLineCircle(got[0] as LineValue, got[1] as CircleValue, s.branch!, eps);
    case "IntersectCircleCircle":
      return intersectCircleCircle(got[0] as CircleValue, got[1] as CircleValue, s.branch!, eps);
  }
}

// -- canonical encoding ----------------------------------------------------------

// CPython float repr: shortest round-trip digits, fixed notation for decimal
// exponents in (-4, 16], otherwise d[.ddd]e±XX with a two-digit exponent.
export function pyFloatRepr(x: number): string {
  if (!Number.isFinite(x)) throw new Error("non-finite floats are not serializable");
  if (x === 0) return Object.is(x, -0) ? "-0.0" : "0.0";
  const neg = x < 0;
  const [mant, expPart] = Math.abs(x).toExponential().split("e");
  const digits = mant.replace(".", "");
  const exp10 = parseInt(expPart, 10);
  const decpt = exp10 + 1; // value = 0.digits * 10^decpt
  let body: string;
  if (decpt > 16 || decpt <= -4) {
    const m = digits.length > 1 ? `${digits[0]}.${digits.slice(1)}` : digits;
    const sign = exp10 < 0 ? "-" : "+";
    body = `${m}e${sign}${String(Math.abs(exp10)).padStart(2, "0")}`;
  } else if (decpt <= 0) {
    body = `0.${"0".repeat(-decpt)}${digits}`;
  } else if (decpt >= digits.length) {
    body = `${digits}${"0".repeat(decpt - digits.length)}.0`;
  } else {
    body = `${digits.slice(0, decpt)}.${digits.slice(decpt)}`;
  }
  return neg ? `-${body}` : body;
}

export function canonicalSerialize(doc: ConstructionDocument): string {
  const steps = doc.steps.map((s) => {
    const parts = [
      `"id":${s.id}`,
      `"kind":${JSON.stringify(s.kind)}`,
      `"args":[${s.args.join(",")}]`,
    ];
    if (s.kind === "FreePoint") {
      parts.push(`"x":${pyFloatRepr(s.x!)}`, `"y":${pyFloatRepr(s.y!)}`);
    }
    if (s.branch !== undefined && s.branch !== null) parts.push(`"branch":${s.branch}`);
    if (s.label !== undefined && s.label !== null) parts.push(`"label":${JSON.stringify(s.label)}`);
    return `{${parts.join(",")}}`;
  });
  return `{"format_version":${doc.format_version},"steps":[${steps.join(",")}]}`;
}

export function docFromObj(obj: unknown): ConstructionDocument {
  const raw = obj as { format_version?: unknown; steps?: unknown };
  if (typeof raw !== "object" || raw === null || typeof raw.format_version !== "number" ||
      !Array.isArray(raw.steps)) {
    throw new Error("malformed construction document");
  }
  const steps = raw.steps.map((entry, i) => {
    const s = entry as Record<string, unknown>;
    const kind = s.kind as StepKind;
    if (!(kind in SIGNATURES)) throw new Error(`steps[${i}]: unknown kind ${String(s.kind)}`);
    if (typeof s.id !== "number") throw new Error(`steps[${i}]: missing id`);
    const args = (s.args as number[]) ?? [];
    const step: ConstructionStep = { id: s.id, kind, args: [...args] };
    if (kind === "FreePoint") {
      step.x = Number(s.x);
      step.y = Number(s.y);
    }
    if (s.branch !== undefined) step.branch = s.branch as 0 | 1;
    if (s.label !== undefined && s.label !== null) step.label = String(s.label);
    return step;
  });
  return { format_version: raw.format_version, steps };
}

export function docToObj(doc: ConstructionDocument): unknown {
  return {
    format_version: doc.format_version,
    steps: doc.steps.map((s) => {
      const out: Record<string, unknown> = { id: s.id, kind: s.kind, args: [...s.args] };
      if (s.kind === "FreePoint") {
        out.x = s.x;
        out.y = s.y;
      }
      if (s.branch !== undefined) out.branch = s.branch;
      if (s.label !== undefined) out.label = s.label;
      return out;
    }),
  };
}

export function labelOf(step: ConstructionStep): string {
  return step.label ?? `#${step.id}`;
}
