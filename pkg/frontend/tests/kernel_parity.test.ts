import { describe, expect, it } from "vitest";

import { canonicalSerialize, docFromObj, evaluate } from "../src/kernel.js";
import { loadVectors } from "./vectors.js";

const TOLERANCE = 1e-9;

function close(a: number, b: number): boolean {
  return Math.abs(a - b) <= TOLERANCE * Math.max(1.0, Math.abs(a), Math.abs(b));
}

describe("kernel evaluation parity with the server vectors", () => {
  const data = loadVectors();

  it("covers a meaningful corpus", () => {
    expect(data.vectors.length).toBeGreaterThanOrEqual(60);
    expect(data.epsilon).toBe(1e-9);
  });

  it("evaluates every vector to within 1e-9", () => {
    for (const [index, vector] of data.vectors.entries()) {
      const doc = docFromObj(vector.doc);
      const values = evaluate(doc);
      for (const [idText, expected] of Object.entries(vector.expected)) {
        const got = values.get(Number(idText));
        const where = `vector ${index} step ${idText}`;
        expect(got, where).toBeDefined();
        expect(got!.type, where).toBe(expected.type);
        if (got!.type === "point") {
          expect(close(got!.x, expected.x as number), where).toBe(true);
          expect(close(got!.y, expected.y as number), where).toBe(true);
        } else if (got!.type === "line") {
          expect(close(got!.a, expected.a as number), where).toBe(true);
          expect(close(got!.b, expected.b as number), where).toBe(true);
          expect(close(got!.c, expected.c as number), where).toBe(true);
        } else if (got!.type === "circle") {
          expect(close(got!.cx, expected.cx as number), where).toBe(true);
          expect(close(got!.cy, expected.cy as number), where).toBe(true);
          expect(close(got!.r, expected.r as number), where).toBe(true);
        }
      }
    }
  });

  it("serializes every vector to the server's exact canonical bytes", () => {
    for (const [index, vector] of data.vectors.entries()) {
      const doc = docFromObj(vector.doc);
      expect(canonicalSerialize(doc), `vector ${index}`).toBe(vector.canonical);
    }
  });
});
