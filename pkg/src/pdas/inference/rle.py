"""Binary run-length encoding of masks.

Canonical byte form: the mask is flattened row-major; foreground runs are
encoded as (start, run_length) pairs of little-endian uint32, starts ascending
and zero-indexed. The base64 of that buffer is what the service and CLI both
emit, so byte-level parity is checkable directly.
"""

from __future__ import annotations

import base64

import numpy as np


def rle_encode(mask: np.ndarray) -> np.ndarray:
    """(n_runs, 2) uint32 array of (start, run_length) pairs."""
    flat = np.asarray(mask).astype(bool).ravel()
    if flat.size == 0:
        return np.zeros((0, 2), dtype=np.uint32)
    padded = np.concatenate([[False], flat, [False]])
    changes = np.flatnonzero(padded[1:] != padded[:-1])
    starts = changes[0::2]
    ends = changes[1::2]
    return np.stack([starts, ends - starts], axis=1).astype(np.uint32)


def rle_decode(runs: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    flat = np.zeros(shape[0] * shape[1], dtype=bool)
    for start, length in np.asarray(runs, dtype=np.int64).reshape(-1, 2):
        if start < 0 or start + length > flat.size:
            raise ValueError(f"run ({start},{length}) exceeds mask of {flat.size} px")
        flat[start : start + length] = True
    return flat.reshape(shape)


def rle_to_bytes(runs: np.ndarray) -> bytes:
    return np.ascontiguousarray(np.asarray(runs, dtype="<u4")).tobytes()


def rle_from_bytes(buf: bytes) -> np.ndarray:
    if len(buf) % 8:
        raise ValueError(f"RLE buffer length {len(buf)} not a multiple of 8")
    return np.frombuffer(buf, dtype="<u4").reshape(-1, 2).copy()


def rle_to_base64(runs: np.ndarray) -> str:
    return base64.b64encode(rle_to_bytes(runs)).decode("ascii")


def rle_from_base64(s: str) -> np.ndarray:
    return rle_from_bytes(base64.b64decode(s))
