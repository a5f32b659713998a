"""Request/response bodies for the segmentation service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class Point(BaseModel):
    row: int
    col: int


class SegmentRequest(BaseModel):
    """Exactly one of `image` (base64 PNG) or `image_id` (a preloaded demo
    image) selects the input."""

    image: str | None = None
    image_id: str | None = None
    points: list[Point] = Field(default_factory=list)
    format: Literal["rle", "png"] = "rle"


class SegmentResponse(BaseModel):
    shape: tuple[int, int]
    format: Literal["rle", "png"]
    mask: str  # base64: RLE byte stream or PNG, per `format`
    instance_count: int
    latency_ms: float


class ImageInfo(BaseModel):
    id: str
    shape: tuple[int, int]
    domain: str


class ImageList(BaseModel):
    images: list[ImageInfo]


class ImagePayload(BaseModel):
    id: str
    shape: tuple[int, int]
    png: str  # base64 PNG


class Health(BaseModel):
    status: str
    model_step: int
    n_params: int
