"""Connected components and instance-map helpers."""

from __future__ import annotations

from collections import deque

import numpy as np


def connected_components(mask: np.ndarray) -> np.ndarray:
    """Label 4-connected foreground components in raster discovery order."""
    mask = np.asarray(mask).astype(bool)
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    nxt = 0
    for r in range(h):
        for c in range(w):
            if not mask[r, c] or labels[r, c]:
                continue
            nxt += 1
            q = deque([(r, c)])
            labels[r, c] = nxt
            while q:
                y, x = q.popleft()
                for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not labels[ny, nx]:
                        labels[ny, nx] = nxt
                        q.append((ny, nx))
    return labels


def canonicalize(instance_map: np.ndarray) -> np.ndarray:
    """Renumber labels to 1..K in order of first raster appearance."""
    inst = np.asarray(instance_map)
    out = np.zeros_like(inst, dtype=np.int32)
    mapping: dict[int, int] = {}
    flat = inst.ravel()
    oflat = out.ravel()
    for i, v in enumerate(flat):
        if v == 0:
            continue
        if v not in mapping:
            mapping[v] = len(mapping) + 1
        oflat[i] = mapping[v]
    return out
