"""Whole-image prediction by tiling training-sized windows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model.network import PromptSegModel
from ..synthdata.prompts import PointPrompt
from .instances import connected_components


def _offsets(extent: int, window: int, stride: int) -> list[int]:
    offs = list(range(0, extent - window + 1, stride))
    if offs[-1] != extent - window:
        offs.append(extent - window)
    return offs


def sliding_window_predict(
    model: PromptSegModel,
    image: np.ndarray,
    points: list[tuple[int, int]] | None = None,
    stride: int | None = None,
    provenance: str = "interactive",
) -> tuple[np.ndarray, np.ndarray]:
    """Full-image (logits, density); overlaps are averaged with uniform
    weights, edge windows are clamped to the image bounds, and each point is
    routed into every window containing it."""
    window = model.config.image_crop
    h, w = image.shape
    if h < window or w < window:
        raise ValueError(f"image {image.shape} smaller than window {window}")
    stride = window // 2 if stride is None else stride
    if not 1 <= stride <= window:
        raise ValueError(f"stride must be in [1, {window}], got {stride}")
    points = points or []
    logits = np.zeros((h, w, 2))
    density = np.zeros((h, w))
    count = np.zeros((h, w, 1))
    for r0 in _offsets(h, window, stride):
        for c0 in _offsets(w, window, stride):
            local = [
                PointPrompt((r - r0, c - c0), "task-prompt", provenance)
                for r, c in points
                if r0 <= r < r0 + window and c0 <= c < c0 + window
            ]
            out = model.forward(image[r0 : r0 + window, c0 : c0 + window], local)
            logits[r0 : r0 + window, c0 : c0 + window] += out.seg_logits.data
            density[r0 : r0 + window, c0 : c0 + window] += out.density.data
            count[r0 : r0 + window, c0 : c0 + window] += 1.0
    logits /= count
    density /= count[:, :, 0]
    return logits, density


@dataclass
class PredictResult:
    mask: np.ndarray  # H×W bool
    instances: np.ndarray  # H×W int32
    logits: np.ndarray  # H×W×2
    density: np.ndarray  # H×W


def interactive_predict(
    model: PromptSegModel,
    image: np.ndarray,
    user_points: list[tuple[int, int]] | None = None,
    stride: int | None = None,
    provenance: str = "interactive",
) -> PredictResult:
    """Point-prompted whole-image segmentation; empty points fall back to the
    promptless path. Duplicate points are used once."""
    pts: list[tuple[int, int]] = []
    h, w = image.shape
    for i, (r, c) in enumerate(user_points or []):
        if not (0 <= r < h and 0 <= c < w):
            raise ValueError(f"point {i} out of bounds")
        if (r, c) not in pts:
            pts.append((r, c))
    logits, density = sliding_window_predict(model, image, pts, stride=stride, provenance=provenance)
    mask = logits[:, :, 1] > logits[:, :, 0]
    return PredictResult(mask=mask, instances=connected_components(mask), logits=logits, density=density)
