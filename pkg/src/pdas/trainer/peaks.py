"""Local-maximum extraction with greedy non-maximum suppression."""

from __future__ import annotations

import numpy as np


def extract_peaks(
    density: np.ndarray, threshold: float, radius: int
) -> list[tuple[tuple[int, int], float]]:
    """Find strict 8-neighbour local maxima >= threshold, then greedily
    suppress any candidate within Chebyshev distance `radius` of an
    already-accepted peak.

    Candidates are visited in (score desc, row asc, col asc) order, so ties
    resolve to the upper-left peak. Returns [((row, col), score), ...] in
    acceptance order.
    """
    d = np.asarray(density, dtype=np.float64)
    if d.ndim != 2:
        raise ValueError(f"density must be 2-D, got shape {d.shape}")
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    h, w = d.shape
    padded = np.full((h + 2, w + 2), -np.inf)
    padded[1:-1, 1:-1] = d
    strict_max = np.ones((h, w), dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            strict_max &= d > padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
    rows, cols = np.nonzero(strict_max & (d >= threshold))
    if rows.size == 0:
        return []
    scores = d[rows, cols]
    # lexsort uses the last key as primary: score desc, then row, then col.
    order = np.lexsort((cols, rows, -scores))
    accepted: list[tuple[tuple[int, int], float]] = []
    for i in order:
        r, c = int(rows[i]), int(cols[i])
        if all(
            max(abs(r - ar), abs(c - ac)) > radius for (ar, ac), _ in accepted
        ):
            accepted.append(((r, c), float(scores[i])))
    return accepted
