/**
 * Overlay compositing. The pixel math is a pure function over RGBA buffers
 * so it can be tested without a canvas; the canvas painter on top is a thin
 * wrapper used by main.ts.
 */

import { Point } from "./api.js";

/** Tint color for foreground pixels (green). */
export const TINT: [number, number, number] = [0, 200, 0];

/**
 * Blend the tint into `base` (RGBA, row-major) wherever `mask` is set.
 * opacity 0 returns the base unchanged; opacity 1 paints solid tint.
 */
export function compositeOverlay(
  base: Uint8ClampedArray,
  mask: Uint8Array,
  opacity: number,
): Uint8ClampedArray {
  if (base.length !== mask.length * 4) {
    throw new Error(`RGBA buffer ${base.length} does not match mask ${mask.length}`);
  }
  const a = Math.min(1, Math.max(0, opacity));
  const out = new Uint8ClampedArray(base);
  for (let i = 0; i < mask.length; i++) {
    if (!mask[i]) continue;
    const p = i * 4;
    out[p] = Math.round(base[p] * (1 - a) + TINT[0] * a);
    out[p + 1] = Math.round(base[p + 1] * (1 - a) + TINT[1] * a);
    out[p + 2] = Math.round(base[p + 2] * (1 - a) + TINT[2] * a);
  }
  return out;
}

/** Draw placed points as crosshair markers, in image-pixel coordinates. */
export function drawMarkers(
  ctx: CanvasRenderingContext2D,
  points: Point[],
  radius = 4,
): void {
  ctx.save();
  ctx.lineWidth = 1.5;
  for (const { row, col } of points) {
    ctx.strokeStyle = "#ffffff";
    ctx.beginPath();
    ctx.arc(col + 0.5, row + 0.5, radius, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.strokeStyle = "#e11d48";
    ctx.beginPath();
    ctx.moveTo(col + 0.5 - radius, row + 0.5);
    ctx.lineTo(col + 0.5 + radius, row + 0.5);
    ctx.moveTo(col + 0.5, row + 0.5 - radius);
    ctx.lineTo(col + 0.5, row + 0.5 + radius);
    ctx.stroke();
  }
  ctx.restore();
}
