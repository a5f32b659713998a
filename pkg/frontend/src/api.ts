/** Typed client for the segmentation service's /v1 HTTP API. */

export interface Point {
  row: number;
  col: number;
}

export interface Health {
  status: string;
  model_step: number;
  n_params: number;
}

export interface ImageInfo {
  id: string;
  shape: [number, number];
  domain: string;
}

export interface ImageList {
  images: ImageInfo[];
}

export interface ImagePayload {
  id: string;
  shape: [number, number];
  /** base64 PNG, grayscale */
  png: string;
}

export interface SegmentRequest {
  image?: string;
  image_id?: string;
  points: Point[];
  format?: "rle" | "png";
}

export interface SegmentResponse {
  shape: [number, number];
  format: "rle" | "png";
  mask: string;
  instance_count: number;
  latency_ms: number;
}

/** The slice of the API the session logic needs; mocked in tests. */
export interface SegmentClient {
  getImage(id: string): Promise<ImagePayload>;
  segment(req: SegmentRequest): Promise<SegmentResponse>;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient implements SegmentClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (...args) => globalThis.fetch(...args),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const detail =
        (body as { error?: string }).error ?? `request failed with ${resp.status}`;
      throw new ApiError(resp.status, detail);
    }
    return body as T;
  }

  health(): Promise<Health> {
    return this.request<Health>("/v1/health");
  }

  listImages(): Promise<ImageList> {
    return this.request<ImageList>("/v1/images");
  }

  getImage(id: string): Promise<ImagePayload> {
    return this.request<ImagePayload>(`/v1/images/${encodeURIComponent(id)}`);
  }

  segment(req: SegmentRequest): Promise<SegmentResponse> {
    return this.request<SegmentResponse>("/v1/segment", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ format: "rle", ...req }),
    });
  }
}
