/**
 * Decoder for the service's mask wire format: the mask is flattened
 * row-major and foreground runs are (start, run_length) pairs of
 * little-endian uint32, base64-encoded. Mirrors the Python encoder so the
 * two sides can be checked byte-for-byte against shared fixtures.
 */

export interface Run {
  start: number;
  length: number;
}

export function base64ToBytes(b64: string): Uint8Array {
  let s: string;
  try {
    s = atob(b64);
  } catch {
    throw new Error("mask payload is not valid base64");
  }
  const out = new Uint8Array(s.length);
  for (let i = 0; i < s.length; i++) out[i] = s.charCodeAt(i);
  return out;
}

export function decodeRuns(bytes: Uint8Array): Run[] {
  if (bytes.length % 8 !== 0) {
    throw new Error(`RLE buffer length ${bytes.length} is not a multiple of 8`);
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const runs: Run[] = [];
  for (let off = 0; off < bytes.length; off += 8) {
    runs.push({
      start: view.getUint32(off, true),
      length: view.getUint32(off + 4, true),
    });
  }
  return runs;
}

/** Paint runs into a flat 0/1 mask of `width * height` pixels. */
export function runsToMask(runs: Run[], width: number, height: number): Uint8Array {
  const mask = new Uint8Array(width * height);
  for (const { start, length } of runs) {
    if (start < 0 || start + length > mask.length) {
      throw new Error(`run (${start},${length}) exceeds mask of ${mask.length} px`);
    }
    mask.fill(1, start, start + length);
  }
  return mask;
}

export function decodeRleMask(b64: string, width: number, height: number): Uint8Array {
  return runsToMask(decodeRuns(base64ToBytes(b64)), width, height);
}
