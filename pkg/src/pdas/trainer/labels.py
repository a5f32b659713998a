"""Pseudo-label generation and prompt assembly for self-training."""

from __future__ import annotations

import logging

import numpy as np

from ..inference.instances import connected_components
from ..inference.sliding import sliding_window_predict
from ..synthdata.generate import DENSITY_PEAK_VALUE, DENSITY_SIGMA, density_from_points
from ..synthdata.prompts import PointPrompt, task_point
from .config import TrainConfig
from .peaks import extract_peaks

logger = logging.getLogger(__name__)

Point = tuple[int, int]

# A density map whose maximum falls below this fraction of the single-point
# kernel peak carries no detection signal; peak picking is skipped entirely.
# Trained detectors respond at ~0.002 of the kernel peak on structureless
# images, two decades below their weakest response to a real instance.
DETECTION_FLOOR = 0.01


def detection_threshold(density: np.ndarray, fraction: float) -> float | None:
    """Absolute peak threshold for a predicted density map, or None.

    Regressed density maps come out blurred, so their amplitude depends on
    how precisely the model localises each instance. Thresholding at a
    fraction of the map's own maximum keeps peak picking meaningful across
    that variation; maps with no response above the noise floor yield None.
    """
    top = float(density.max())
    if top < DETECTION_FLOOR * DENSITY_PEAK_VALUE:
        return None
    return fraction * top


def gen_seg_pseudolabels(
    logits: np.ndarray, threshold: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Teacher logits (H, W, 2) -> (hard labels, confidence, ignore mask).

    Confidence is the max softmax probability; pixels below `threshold`
    are flagged for exclusion from the segmentation loss.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 3 or z.shape[-1] != 2:
        raise ValueError(f"expected (H, W, 2) logits, got shape {z.shape}")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=-1, keepdims=True)
    labels = np.argmax(z, axis=-1).astype(np.int64)
    confidence = np.max(probs, axis=-1)
    ignore = confidence < threshold
    return labels, confidence, ignore


def foreground_probability(labels: np.ndarray, confidence: np.ndarray) -> np.ndarray:
    """Recover p(foreground) from hard labels + max-probability confidence."""
    return np.where(labels == 1, confidence, 1.0 - confidence)


def seed_prompt_labels(
    labels: np.ndarray, ignore: np.ndarray, points: list[Point], radius: int = 1
) -> None:
    """Stamp trusted annotated centers into a pseudo-label pair, in place.

    A point annotation certifies foreground at that pixel, so a small square
    around each point is forced to class 1 and removed from the ignore mask —
    the direct supervision a dot label carries.
    """
    h, w = labels.shape
    for r, c in points:
        r0, r1 = max(0, r - radius), min(h, r + radius + 1)
        c0, c1 = max(0, c - radius), min(w, c + radius + 1)
        labels[r0:r1, c0:c1] = 1
        ignore[r0:r1, c0:c1] = False


def dedup_points(base: list[Point], candidates: list[Point], radius: int) -> list[Point]:
    """Drop candidates within Chebyshev distance `radius` of any base point.

    Survivors keep their input order.
    """
    kept = []
    for r, c in candidates:
        if all(max(abs(r - br), abs(c - bc)) > radius for br, bc in base):
            kept.append((int(r), int(c)))
    return kept


def gen_det_pseudolabels(
    teacher_density: np.ndarray, gt_sparse: list[Point], config: TrainConfig
) -> tuple[np.ndarray, list[Point]]:
    """Merge sparse annotations with teacher detections into a density target.

    Detected peaks within nms_radius of an annotated point are dropped, so
    annotations always win. Returns (density target, merged point list).
    """
    absolute = detection_threshold(teacher_density, config.det_peak_threshold)
    if absolute is None:
        detected: list[Point] = []
    else:
        peaks = extract_peaks(teacher_density, absolute, config.nms_radius)
        detected = [pos for pos, _ in peaks]
    merged = [(int(r), int(c)) for r, c in gt_sparse]
    merged += dedup_points(merged, detected, config.nms_radius)
    target = density_from_points(merged, DENSITY_SIGMA, teacher_density.shape)
    return target, merged


def assemble_target_prompts(
    sparse: list[Point],
    detected: list[Point],
    config: TrainConfig,
    sparse_provenance: str = "ground-truth",
) -> list[PointPrompt]:
    """Task prompts for the student on a target view: annotated points first,
    then deduplicated detections."""
    prompts = [
        PointPrompt((int(r), int(c)), "task-prompt", sparse_provenance)
        for r, c in sparse
    ]
    for r, c in dedup_points(sparse, detected, config.nms_radius):
        prompts.append(PointPrompt((r, c), "task-prompt", "detected"))
    return prompts


def select_pcl_points(
    labels: np.ndarray,
    confidence: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator,
) -> tuple[list[Point], list[Point]]:
    """Pick contrastive query and negative pixels from teacher pseudo-labels.

    Queries: up to 3 pixels per predicted-foreground connected component,
    restricted to confidence > delta_f. Negatives: n_negatives pixels with
    foreground probability < delta_b, sampled uniformly (all of them if
    fewer qualify).
    """
    p_fg = foreground_probability(labels, confidence)
    comps = connected_components(labels == 1)
    queries: list[Point] = []
    for k in range(1, int(comps.max()) + 1):
        pix = np.argwhere((comps == k) & (p_fg > config.delta_f))
        if pix.shape[0] == 0:
            continue
        take = min(3, pix.shape[0])
        idx = np.sort(rng.choice(pix.shape[0], size=take, replace=False))
        queries.extend((int(pix[i, 0]), int(pix[i, 1])) for i in idx)
    neg_pix = np.argwhere(p_fg < config.delta_b)
    if neg_pix.shape[0] > config.n_negatives:
        idx = np.sort(rng.choice(neg_pix.shape[0], size=config.n_negatives, replace=False))
        neg_pix = neg_pix[idx]
    elif neg_pix.shape[0] < config.n_negatives:
        logger.debug(
            "only %d of %d requested negatives available",
            neg_pix.shape[0],
            config.n_negatives,
        )
    negatives = [(int(r), int(c)) for r, c in neg_pix]
    return queries, negatives


def sample_source_prompts(
    centers: list[Point], rng: np.random.Generator
) -> list[PointPrompt]:
    """Draw a uniform number n in {0..K} of instance centers as task prompts."""
    k = len(centers)
    n = int(rng.integers(0, k + 1))
    if n == 0:
        return []
    idx = np.sort(rng.choice(k, size=n, replace=False))
    return [task_point(centers[i]) for i in idx]


def uda_bootstrap_points(
    model, step: int, images: list[np.ndarray], config: TrainConfig
) -> list[list[Point]]:
    """One full-image detection pass of the source model over the target set.

    Peaks at twice the usual density threshold stand in for point annotations
    when none exist. Refuses an untrained model.
    """
    if step <= 0:
        raise ValueError(
            "bootstrap requires a trained source model, got a step-0 checkpoint"
        )
    fraction = 2.0 * config.det_peak_threshold
    out = []
    for img in images:
        _, density = sliding_window_predict(model, img)
        absolute = detection_threshold(density, fraction)
        if absolute is None:
            out.append([])
            continue
        peaks = extract_peaks(density, absolute, config.nms_radius)
        out.append([pos for pos, _ in peaks])
    return out
