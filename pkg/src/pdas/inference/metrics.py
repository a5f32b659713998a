"""Semantic and instance-level evaluation metrics.

Conventions (fixed so scores are reproducible):
- AJI matches greedily over ground-truth labels in ascending order; each
  prediction is usable once; a match requires IoU > 0; ties prefer the lower
  prediction label.
- PQ counts matches at IoU strictly greater than 0.5.
- Empty-vs-empty comparisons score 1 by convention.
"""

from __future__ import annotations

import numpy as np


def dice(pred: np.ndarray, gt: np.ndarray) -> float:
    pred = np.asarray(pred).astype(bool)
    gt = np.asarray(gt).astype(bool)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {gt.shape}")
    p, g = int(pred.sum()), int(gt.sum())
    if p == 0 and g == 0:
        return 1.0
    inter = int((pred & gt).sum())
    return 2.0 * inter / (p + g)


def _instance_sizes(inst: np.ndarray) -> dict[int, int]:
    ids, counts = np.unique(inst[inst > 0], return_counts=True)
    return dict(zip(ids.tolist(), counts.tolist()))


def _intersections(pred: np.ndarray, gt: np.ndarray) -> dict[tuple[int, int], int]:
    """Pixel counts for every overlapping (gt_id, pred_id) pair."""
    both = (pred > 0) & (gt > 0)
    if not both.any():
        return {}
    pairs = gt[both].astype(np.int64) * (pred.max() + 1) + pred[both].astype(np.int64)
    uniq, counts = np.unique(pairs, return_counts=True)
    out = {}
    base = pred.max() + 1
    for key, n in zip(uniq.tolist(), counts.tolist()):
        out[(key // base, key % base)] = n
    return out


def aji(pred: np.ndarray, gt: np.ndarray) -> float:
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {gt.shape}")
    psizes = _instance_sizes(pred)
    gsizes = _instance_sizes(gt)
    if not psizes and not gsizes:
        return 1.0
    inter = _intersections(pred, gt)
    used: set[int] = set()
    num = 0.0
    den = 0.0
    for g in sorted(gsizes):
        best_iou, best_p, best_i = 0.0, None, 0
        for p in sorted(pid for (gid, pid) in inter if gid == g):
            if p in used:
                continue
            i = inter[(g, p)]
            iou = i / (gsizes[g] + psizes[p] - i)
            if iou > best_iou:
                best_iou, best_p, best_i = iou, p, i
        if best_p is None:
            den += gsizes[g]  # unmatched ground truth
        else:
            used.add(best_p)
            num += best_i
            den += gsizes[g] + psizes[best_p] - best_i
    for p, size in psizes.items():
        if p not in used:
            den += size
    return num / den if den else 1.0


def pq(pred: np.ndarray, gt: np.ndarray) -> tuple[float, float, float]:
    """(pq, sq, rq) with IoU > 0.5 matching."""
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {gt.shape}")
    psizes = _instance_sizes(pred)
    gsizes = _instance_sizes(gt)
    if not psizes and not gsizes:
        return 1.0, 1.0, 1.0
    inter = _intersections(pred, gt)
    matched_iou: list[float] = []
    used_p: set[int] = set()
    matched_g: set[int] = set()
    for (g, p), i in sorted(inter.items()):
        iou = i / (gsizes[g] + psizes[p] - i)
        if iou > 0.5:
            # IoU > 0.5 matches are necessarily one-to-one
            matched_iou.append(iou)
            used_p.add(p)
            matched_g.add(g)
    tp = len(matched_iou)
    fp = len(psizes) - len(used_p)
    fn = len(gsizes) - len(matched_g)
    denom = tp + 0.5 * fp + 0.5 * fn
    if denom == 0:
        return 1.0, 1.0, 1.0
    sq = float(np.mean(matched_iou)) if matched_iou else 0.0
    rq = tp / denom
    return sq * rq, sq, rq
