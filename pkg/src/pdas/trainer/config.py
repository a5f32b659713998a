"""Training configuration for supervised, UDA, and WDA runs."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

MODES = ("supervised", "uda", "wda")


@dataclass
class TrainConfig:
    mode: str = "supervised"
    iterations: int = 2000
    batch_size: int = 2
    base_lr: float = 1e-4
    weight_decay: float = 1e-4
    ema_momentum: float = 0.99
    sparse_fraction: float = 0.15
    seg_conf_threshold: float = 0.9
    det_peak_threshold: float = 0.3  # fraction of the density map's maximum
    nms_radius: int = 4
    tau: float = 0.1
    delta_f: float = 0.9
    delta_b: float = 0.1
    n_negatives: int = 64
    lambda_seg: float = 1.0
    lambda_det: float = 1.0
    lambda_pcl: float = 0.1
    poly_power: float = 0.9
    checkpoint_every: int = 500
    seed: int = 0
    # ablation switches
    use_pseudo_labels: bool = True
    use_training_prompts: bool = True
    use_pcl: bool = True

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("seg_conf_threshold", "det_peak_threshold", "delta_f", "delta_b"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0,1), got {v}")
        if self.delta_b >= self.delta_f:
            raise ValueError(f"delta_b {self.delta_b} must be below delta_f {self.delta_f}")
        if not 0.0 <= self.ema_momentum < 1.0:
            raise ValueError(f"ema_momentum must be in [0,1), got {self.ema_momentum}")
        if self.iterations < 1 or self.batch_size < 1:
            raise ValueError("iterations and batch_size must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
