import { describe, expect, it } from "vitest";

import { compositeOverlay, TINT } from "../src/overlay.js";
import { decodeRleMask } from "../src/rle.js";
import { encodeRuns } from "./helpers.js";

function gray(n: number, value = 120): Uint8ClampedArray {
  const base = new Uint8ClampedArray(n * 4);
  for (let i = 0; i < n; i++) {
    base.set([value, value, value, 255], i * 4);
  }
  return base;
}

describe("overlay compositing", () => {
  it("opacity 0 returns the raw image", () => {
    const base = gray(4);
    const out = compositeOverlay(base, new Uint8Array([1, 1, 1, 1]), 0);
    expect(Array.from(out)).toEqual(Array.from(base));
  });

  it("full-foreground mask at opacity 1 is solid tint", () => {
    const out = compositeOverlay(gray(4), new Uint8Array([1, 1, 1, 1]), 1);
    for (let i = 0; i < 4; i++) {
      expect(Array.from(out.slice(i * 4, i * 4 + 4))).toEqual([...TINT, 255]);
    }
  });

  it("RLE [(0,4)] on a 2x2 image tints every pixel", () => {
    const mask = decodeRleMask(encodeRuns([[0, 4]]), 2, 2);
    const out = compositeOverlay(gray(4), mask, 0.5);
    for (let i = 0; i < 4; i++) {
      expect(out[i * 4 + 1]).toBe(Math.round(120 * 0.5 + TINT[1] * 0.5));
      expect(out[i * 4]).toBe(60);
    }
  });

  it("background pixels pass through untouched at any opacity", () => {
    const base = gray(4, 33);
    const out = compositeOverlay(base, new Uint8Array([0, 1, 0, 0]), 0.8);
    expect(Array.from(out.slice(0, 4))).toEqual([33, 33, 33, 255]);
    expect(Array.from(out.slice(8, 12))).toEqual([33, 33, 33, 255]);
    expect(out[4 + 1]).toBeGreaterThan(33); // the one masked pixel moved toward green
  });

  it("mismatched buffer sizes are an error", () => {
    expect(() => compositeOverlay(gray(4), new Uint8Array(3), 0.5)).toThrow(/match/);
  });

  it("opacity is clamped to [0, 1]", () => {
    const out = compositeOverlay(gray(4), new Uint8Array([1, 1, 1, 1]), 7);
    expect(Array.from(out.slice(0, 3))).toEqual([...TINT]);
  });
});
