"""Dataset-level evaluation with configurable test-prompt budget."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from ..model.network import PromptSegModel
from ..synthdata.generate import Sample, sample_sparse_points
from .metrics import aji, dice, pq
from .sliding import interactive_predict


def _prompt_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


def evaluate(
    model: PromptSegModel,
    samples: list[Sample],
    test_prompt_fraction: float = 0.0,
    seed: int = 1234,
    sample_ids: list[str] | None = None,
) -> dict:
    """Per-image Dice/AJI/PQ and dataset means; prompts are a deterministic
    per-image subset of the ground-truth centers."""
    per_image = []
    for idx, s in enumerate(samples):
        prompts = sample_sparse_points(s.centers, test_prompt_fraction, _prompt_seed(seed, idx))
        pred = interactive_predict(model, s.image, prompts, provenance="ground-truth")
        p, sq, rq = pq(pred.instances, s.instance_map)
        per_image.append(
            {
                "id": sample_ids[idx] if sample_ids else f"{idx:04d}",
                "dice": dice(pred.mask, s.instance_map > 0),
                "aji": aji(pred.instances, s.instance_map),
                "pq": p,
                "sq": sq,
                "rq": rq,
            }
        )
    keys = ("dice", "aji", "pq", "sq", "rq")
    mean = {k: float(np.mean([row[k] for row in per_image])) for k in keys}
    return {"per_image": per_image, "mean": mean, "prompt_fraction": test_prompt_fraction}


def export_instance_png(path: str | Path, instance_map: np.ndarray) -> None:
    Image.fromarray(np.asarray(instance_map).astype(np.uint16)).save(path)


def load_instance_png(path: str | Path) -> np.ndarray:
    return np.asarray(Image.open(path)).astype(np.int32)
