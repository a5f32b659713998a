import { SegmentClient, SegmentRequest, SegmentResponse } from "../src/api.js";

/** Encode (start, run) pairs the way the service does: LE uint32, base64. */
export function encodeRuns(runs: [number, number][]): string {
  const bytes = new Uint8Array(runs.length * 8);
  const view = new DataView(bytes.buffer);
  runs.forEach(([start, length], i) => {
    view.setUint32(i * 8, start, true);
    view.setUint32(i * 8 + 4, length, true);
  });
  return Buffer.from(bytes).toString("base64");
}

/**
 * In-memory stand-in for the segmentation service: records every request
 * and answers with a mask determined by the number of points, so tests can
 * tell which request produced the visible overlay.
 */
export class MockService implements SegmentClient {
  requests: SegmentRequest[] = [];
  shape: [number, number] = [4, 4];
  maskFor: (nPoints: number) => string = (n) => encodeRuns([[0, n + 1]]);

  async getImage(id: string) {
    return { id, shape: this.shape, png: "unused" };
  }

  async segment(req: SegmentRequest): Promise<SegmentResponse> {
    this.requests.push(structuredClone(req));
    return {
      shape: this.shape,
      format: "rle",
      mask: this.maskFor(req.points.length),
      instance_count: req.points.length,
      latency_ms: 5,
    };
  }
}

/** Variant whose responses resolve only when the test says so. */
export class DeferredService extends MockService {
  private gates: { promise: Promise<void>; open: () => void }[] = [];

  private gate(i: number) {
    while (this.gates.length <= i) {
      let open!: () => void;
      const promise = new Promise<void>((resolve) => (open = resolve));
      this.gates.push({ promise, open });
    }
    return this.gates[i];
  }

  override async segment(req: SegmentRequest): Promise<SegmentResponse> {
    const n = this.requests.length;
    this.requests.push(structuredClone(req));
    await this.gate(n).promise;
    return {
      shape: this.shape,
      format: "rle",
      mask: this.maskFor(this.requests[n].points.length),
      instance_count: this.requests[n].points.length,
      latency_ms: 5,
    };
  }

  /** Release the i-th request (0-based, arrival order); may precede it. */
  release(i: number): void {
    this.gate(i).open();
  }
}
