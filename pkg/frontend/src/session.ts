/**
 * Client-side state for the interactive loop: one selected image, an ordered
 * list of placed points (the undo stack), and the overlay from the most
 * recent completed request. Every request carries the full point list — the
 * service is stateless — and responses are applied in sequence-number order
 * so a slow early response can never clobber a newer overlay.
 */

import { Point, SegmentClient } from "./api.js";
import { decodeRleMask } from "./rle.js";

export interface Overlay {
  /** flat 0/1 foreground mask, row-major */
  mask: Uint8Array;
  width: number;
  height: number;
  /** sequence number of the request that produced it */
  seq: number;
}

export interface SessionError {
  kind: "network" | "decode" | "bounds";
  message: string;
}

export interface SessionView {
  imageId: string | null;
  /** base64 PNG of the selected image, for the canvas base layer */
  imagePng: string | null;
  shape: [number, number] | null;
  points: Point[];
  overlay: Overlay | null;
  inFlight: boolean;
  /** server-reported inference time of the applied response, ms */
  latencyMs: number | null;
  error: SessionError | null;
}

export class Session {
  private imageId: string | null = null;
  private imagePng: string | null = null;
  private shape: [number, number] | null = null;
  private points: Point[] = [];
  private overlay: Overlay | null = null;
  private latencyMs: number | null = null;
  private error: SessionError | null = null;

  private nextSeq = 0;
  private appliedSeq = 0;
  private pending = 0;

  constructor(
    private client: SegmentClient,
    private onChange?: (view: SessionView) => void,
  ) {}

  view(): SessionView {
    return {
      imageId: this.imageId,
      imagePng: this.imagePng,
      shape: this.shape,
      points: [...this.points],
      overlay: this.overlay,
      inFlight: this.pending > 0,
      latencyMs: this.latencyMs,
      error: this.error,
    };
  }

  private notify(): void {
    this.onChange?.(this.view());
  }

  /** Load an image and show its promptless segmentation. */
  async selectImage(id: string): Promise<void> {
    const payload = await this.client.getImage(id);
    this.imageId = payload.id;
    this.imagePng = payload.png;
    this.shape = payload.shape;
    this.points = [];
    this.overlay = null;
    this.latencyMs = null;
    this.error = null;
    this.notify();
    await this.requestSegmentation();
  }

  /**
   * Append a point and re-segment with the full list. Out-of-bounds clicks
   * are rejected without a request.
   */
  async placePoint(row: number, col: number): Promise<void> {
    if (this.shape === null) return;
    const [h, w] = this.shape;
    if (row < 0 || row >= h || col < 0 || col >= w) {
      this.error = {
        kind: "bounds",
        message: `point (${row},${col}) outside ${h}x${w} image`,
      };
      this.notify();
      return;
    }
    this.points.push({ row, col });
    this.notify();
    await this.requestSegmentation();
  }

  /** Pop the last point and re-issue the request with the remaining list. */
  async undo(): Promise<void> {
    if (this.imageId === null || this.points.length === 0) return;
    this.points.pop();
    this.notify();
    await this.requestSegmentation();
  }

  private async requestSegmentation(): Promise<void> {
    if (this.imageId === null) return;
    const seq = ++this.nextSeq;
    this.pending++;
    this.notify();
    try {
      const resp = await this.client.segment({
        image_id: this.imageId,
        points: [...this.points],
        format: "rle",
      });
      if (seq <= this.appliedSeq) return; // stale: a newer response already landed
      this.appliedSeq = seq;
      const [h, w] = resp.shape;
      try {
        this.overlay = { mask: decodeRleMask(resp.mask, w, h), width: w, height: h, seq };
        this.latencyMs = resp.latency_ms;
        this.error = null;
      } catch (e) {
        this.overlay = null;
        this.error = { kind: "decode", message: (e as Error).message };
      }
    } catch (e) {
      // Service unreachable or refused: keep the point list so a retry
      // (next click or undo) resends it.
      this.error = { kind: "network", message: (e as Error).message };
    } finally {
      this.pending--;
      this.notify();
    }
  }
}
