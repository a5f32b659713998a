import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { base64ToBytes, decodeRleMask, decodeRuns, runsToMask } from "../src/rle.js";
import { encodeRuns } from "./helpers.js";

describe("rle decoding", () => {
  it("decodes [(0,4)] on a 2x2 image to a fully set mask", () => {
    expect(Array.from(decodeRleMask(encodeRuns([[0, 4]]), 2, 2))).toEqual([1, 1, 1, 1]);
  });

  it("decodes an empty payload to an all-background mask", () => {
    expect(Array.from(decodeRleMask("", 3, 2))).toEqual([0, 0, 0, 0, 0, 0]);
  });

  it("reads little-endian uint32 pairs", () => {
    const runs = decodeRuns(base64ToBytes(encodeRuns([[258, 2], [7, 1]])));
    expect(runs).toEqual([
      { start: 258, length: 2 },
      { start: 7, length: 1 },
    ]);
  });

  it("matches the service encoder's fixture pixel-for-pixel", () => {
    const fixture = JSON.parse(
      readFileSync(new URL("./fixtures/mask_fixture.json", import.meta.url), "utf8"),
    ) as { width: number; height: number; mask_b64: string; pixels: number[] };
    const mask = decodeRleMask(fixture.mask_b64, fixture.width, fixture.height);
    expect(Array.from(mask)).toEqual(fixture.pixels);
  });

  it("rejects buffers that are not whole (start, run) pairs", () => {
    expect(() => decodeRuns(new Uint8Array(12))).toThrow(/multiple of 8/);
  });

  it("rejects runs that overflow the mask", () => {
    expect(() => runsToMask([{ start: 3, length: 2 }], 2, 2)).toThrow(/exceeds/);
    expect(() => decodeRleMask(encodeRuns([[4, 1]]), 2, 2)).toThrow(/exceeds/);
  });

  it("rejects garbage base64", () => {
    expect(() => base64ToBytes("!!not base64!!")).toThrow(/base64/);
  });
});
