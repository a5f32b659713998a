"""Dataset directory layout.

manifest.json records the generating spec, sample ids, density sigma, and the
sparse fraction. Per sample: `<id>_image.png` (8-bit grayscale),
`<id>_instances.png` (16-bit grayscale), `<id>_points.json` with centers and
sparse points. Density maps are always re-derived, never stored.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .generate import DENSITY_SIGMA, DomainSpec, Sample, density_from_points


def save_dataset(root: str | Path, spec: DomainSpec, samples: list[Sample], sparse_fraction: float) -> None:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    ids = [f"{i:04d}" for i in range(len(samples))]
    manifest = {
        "spec": spec.to_dict(),
        "samples": ids,
        "density_sigma": DENSITY_SIGMA,
        "sparse_fraction": sparse_fraction,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2))
    for sid, s in zip(ids, samples):
        img8 = np.clip(np.round(s.image * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(img8, mode="L").save(root / f"{sid}_image.png")
        inst16 = s.instance_map.astype(np.uint16)
        Image.fromarray(inst16).save(root / f"{sid}_instances.png")
        points = {
            "centers": [[int(r), int(c)] for r, c in s.centers],
            "sparse": [[int(r), int(c)] for r, c in s.sparse_points],
        }
        (root / f"{sid}_points.json").write_text(json.dumps(points))


def load_sample(root: str | Path, sid: str) -> Sample:
    root = Path(root)
    image = np.asarray(Image.open(root / f"{sid}_image.png"), dtype=np.float64) / 255.0
    inst = np.asarray(Image.open(root / f"{sid}_instances.png")).astype(np.int32)
    points = json.loads((root / f"{sid}_points.json").read_text())
    centers = [tuple(p) for p in points["centers"]]
    sparse = [tuple(p) for p in points["sparse"]]
    density = density_from_points(centers, DENSITY_SIGMA, inst.shape)
    return Sample(image=image, instance_map=inst, centers=centers, sparse_points=sparse, density=density)


def load_dataset(root: str | Path) -> tuple[list[Sample], dict]:
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no manifest.json under {root}")
    manifest = json.loads(manifest_path.read_text())
    samples = [load_sample(root, sid) for sid in manifest["samples"]]
    return samples, manifest
