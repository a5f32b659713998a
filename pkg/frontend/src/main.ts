/** DOM wiring: image catalog, canvas, opacity slider, undo, error surfaces. */

import { ApiClient } from "./api.js";
import { compositeOverlay, drawMarkers } from "./overlay.js";
import { Session, SessionView } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("canvas");
const imageList = el<HTMLUListElement>("image-list");
const opacitySlider = el<HTMLInputElement>("opacity");
const undoButton = el<HTMLButtonElement>("undo");
const banner = el<HTMLDivElement>("banner");
const toast = el<HTMLDivElement>("toast");
const statusLine = el<HTMLSpanElement>("status");
const latencyLine = el<HTMLSpanElement>("latency");

const apiBase =
  new URLSearchParams(location.search).get("api") ?? "http://localhost:8000";
const client = new ApiClient(apiBase);
const session = new Session(client, (view) => void paint(view));

let baseImage: { png: string; data: ImageData } | null = null;
let lastView: SessionView = session.view();
let toastTimer: ReturnType<typeof setTimeout> | null = null;

async function decodePng(png: string): Promise<ImageData> {
  const img = new Image();
  img.src = `data:image/png;base64,${png}`;
  await img.decode();
  const off = document.createElement("canvas");
  off.width = img.naturalWidth;
  off.height = img.naturalHeight;
  const ctx = off.getContext("2d");
  if (!ctx) throw new Error("2d context unavailable");
  ctx.drawImage(img, 0, 0);
  return ctx.getImageData(0, 0, off.width, off.height);
}

function showToast(message: string): void {
  toast.textContent = message;
  toast.classList.add("visible");
  if (toastTimer) clearTimeout(toastTimer);
  toastTimer = setTimeout(() => toast.classList.remove("visible"), 4000);
}

async function paint(view: SessionView): Promise<void> {
  lastView = view;
  undoButton.disabled = view.points.length === 0;
  banner.textContent = view.error?.kind === "network" ? view.error.message : "";
  banner.classList.toggle("visible", view.error?.kind === "network");
  if (view.error && view.error.kind !== "network") showToast(view.error.message);
  latencyLine.textContent =
    view.latencyMs === null ? "" : `${view.latencyMs.toFixed(0)} ms`;
  canvas.classList.toggle("busy", view.inFlight);

  if (!view.imagePng || !view.shape) return;
  if (!baseImage || baseImage.png !== view.imagePng) {
    baseImage = { png: view.imagePng, data: await decodePng(view.imagePng) };
    if (lastView.imagePng !== view.imagePng) return; // image changed mid-decode
  }
  const [h, w] = view.shape;
  canvas.width = w;
  canvas.height = h;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;

  let pixels: Uint8ClampedArray = baseImage.data.data;
  if (view.overlay && view.overlay.width === w && view.overlay.height === h) {
    pixels = compositeOverlay(pixels, view.overlay.mask, opacitySlider.valueAsNumber);
  }
  const frame = ctx.createImageData(w, h);
  frame.data.set(pixels);
  ctx.putImageData(frame, 0, 0);
  drawMarkers(ctx, view.points);
}

canvas.addEventListener("click", (ev) => {
  if (!lastView.shape) return;
  const rect = canvas.getBoundingClientRect();
  const col = Math.floor(((ev.clientX - rect.left) / rect.width) * canvas.width);
  const row = Math.floor(((ev.clientY - rect.top) / rect.height) * canvas.height);
  void session.placePoint(row, col);
});

undoButton.addEventListener("click", () => void session.undo());
opacitySlider.addEventListener("input", () => void paint(lastView));

async function boot(): Promise<void> {
  try {
    const health = await client.health();
    statusLine.textContent = `model @ step ${health.model_step}, ${health.n_params} tensors`;
  } catch (e) {
    statusLine.textContent = `service unreachable at ${apiBase}`;
    banner.textContent = (e as Error).message;
    banner.classList.add("visible");
    return;
  }
  const { images } = await client.listImages();
  for (const info of images) {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.textContent = `${info.id} (${info.shape[0]}x${info.shape[1]})`;
    button.addEventListener("click", () => void session.selectImage(info.id));
    item.appendChild(button);
    imageList.appendChild(item);
  }
}

void boot();
