"""HTTP wrapper around point-prompted inference.

The app owns one read-only model snapshot plus a small catalog of demo
images; POST /v1/segment runs the same code path the CLI uses, so both emit
byte-identical RLE payloads for the same inputs.
"""

from __future__ import annotations

import base64
import io
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from PIL import Image

from ..inference.rle import rle_encode, rle_to_base64
from ..inference.sliding import interactive_predict
from ..model.network import PromptSegModel
from ..synthdata.benchmark import VAL_OFFSET, source_spec, target_spec
from ..synthdata.generate import generate_sample
from .schemas import (
    Health,
    ImageInfo,
    ImageList,
    ImagePayload,
    Point,
    SegmentRequest,
    SegmentResponse,
)

MAX_SIDE = 1024


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def _image_to_png_b64(image: np.ndarray) -> str:
    img8 = np.clip(np.round(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(img8, mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _png_b64_to_image(b64: str) -> np.ndarray:
    raw = base64.b64decode(b64)
    img = Image.open(io.BytesIO(raw)).convert("L")
    return np.asarray(img).astype(np.float64) / 255.0


def demo_images(n_per_domain: int = 2) -> dict[str, tuple[str, np.ndarray]]:
    """id -> (domain, image): a few validation images from each benchmark domain."""
    out: dict[str, tuple[str, np.ndarray]] = {}
    for domain, spec_fn in (("source", source_spec), ("target", target_spec)):
        spec = spec_fn()
        spec = spec_fn(seed=spec.seed + VAL_OFFSET)
        for i in range(n_per_domain):
            out[f"{domain}-val-{i:04d}"] = (domain, generate_sample(spec, i).image)
    return out


def segment_to_payload(mask: np.ndarray, fmt: str) -> str:
    """The canonical wire form of a binary mask (shared by CLI and service)."""
    if fmt == "rle":
        return rle_to_base64(rle_encode(mask))
    img = Image.fromarray(mask.astype(np.uint8) * 255, mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def create_app(
    checkpoint: str | Path | None = None,
    model: PromptSegModel | None = None,
    images: dict[str, tuple[str, np.ndarray]] | None = None,
) -> FastAPI:
    """Build the service. Pass a checkpoint path or an already-loaded model;
    with neither, every inference call answers 503."""
    app = FastAPI(title="promptable segmentation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    step = 0
    if model is None and checkpoint is not None:
        model, step = PromptSegModel.load(checkpoint)
    catalog = demo_images() if images is None else images

    @app.get("/v1/health", response_model=Health)
    def health():
        if model is None:
            return _error(503, "model not loaded")
        return Health(status="ok", model_step=step, n_params=len(model.params))

    @app.get("/v1/images", response_model=ImageList)
    def list_images():
        return ImageList(
            images=[
                ImageInfo(id=k, shape=img.shape, domain=dom)
                for k, (dom, img) in sorted(catalog.items())
            ]
        )

    @app.get("/v1/images/{image_id}", response_model=ImagePayload)
    def get_image(image_id: str):
        if image_id not in catalog:
            return _error(404, f"unknown image_id {image_id!r}")
        _, img = catalog[image_id]
        return ImagePayload(id=image_id, shape=img.shape, png=_image_to_png_b64(img))

    @app.post("/v1/segment", response_model=SegmentResponse)
    def segment(req: SegmentRequest):
        if model is None:
            return _error(503, "model not loaded")
        if (req.image is None) == (req.image_id is None):
            return _error(400, "provide exactly one of image or image_id")
        if req.image_id is not None:
            if req.image_id not in catalog:
                return _error(404, f"unknown image_id {req.image_id!r}")
            image = catalog[req.image_id][1]
        else:
            try:
                image = _png_b64_to_image(req.image)
            except Exception:
                return _error(400, "image is not decodable base64 PNG")
        h, w = image.shape
        if h > MAX_SIDE or w > MAX_SIDE:
            return _error(413, f"image {h}x{w} exceeds {MAX_SIDE}x{MAX_SIDE}")
        if h < model.config.image_crop or w < model.config.image_crop:
            return _error(
                400, f"image {h}x{w} smaller than model window {model.config.image_crop}"
            )
        t0 = time.perf_counter()
        try:
            pred = interactive_predict(
                model, image, [(p.row, p.col) for p in req.points]
            )
        except ValueError as e:
            return _error(400, str(e))
        latency = (time.perf_counter() - t0) * 1e3
        return SegmentResponse(
            shape=(h, w),
            format=req.format,
            mask=segment_to_payload(pred.mask, req.format),
            instance_count=int(pred.instances.max()),
            latency_ms=latency,
        )

    return app
