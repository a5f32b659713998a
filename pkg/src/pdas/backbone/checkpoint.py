"""Binary checkpoint format.

Layout: 8-byte magic ``PDASCKPT`` | uint64-LE header length | UTF-8 JSON
header | raw float64 little-endian parameter buffers, concatenated in header
order. The header carries parameter names/shapes/dtype, the optimizer step,
and an arbitrary JSON-serializable config blob. Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any

import numpy as np

from .tensor import Tensor

MAGIC = b"PDASCKPT"


class CheckpointError(ValueError):
    pass


def save_checkpoint(
    path: str | Path,
    params: dict[str, Tensor],
    step: int = 0,
    config: dict[str, Any] | None = None,
) -> None:
    names = list(params.keys())
    header = {
        "params": [{"name": n, "shape": list(params[n].data.shape), "dtype": "float64"} for n in names],
        "step": int(step),
        "config": config or {},
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for n in names:
            arr = np.ascontiguousarray(params[n].data, dtype="<f8")
            f.write(arr.tobytes())


def load_checkpoint(path: str | Path) -> tuple[dict[str, Tensor], int, dict[str, Any]]:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r} in {path}")
        (hlen,) = struct.unpack("<Q", f.read(8))
        header = json.loads(f.read(hlen).decode("utf-8"))
        params: dict[str, Tensor] = {}
        for entry in header["params"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = f.read(count * 8)
            if len(buf) != count * 8:
                raise CheckpointError(f"truncated buffer for {entry['name']} in {path}")
            arr = np.frombuffer(buf, dtype="<f8").astype(np.float64).reshape(shape)
            params[entry["name"]] = Tensor(arr.copy(), requires_grad=True, name=entry["name"])
    return params, int(header["step"]), header.get("config", {})
