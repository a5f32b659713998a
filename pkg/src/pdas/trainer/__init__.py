from .config import TrainConfig
from .ema import TeacherStudent, ema_update
from .labels import (
    assemble_target_prompts,
    dedup_points,
    detection_threshold,
    foreground_probability,
    gen_det_pseudolabels,
    gen_seg_pseudolabels,
    sample_source_prompts,
    seed_prompt_labels,
    select_pcl_points,
    uda_bootstrap_points,
)
from .loop import fit, train_step, write_trace
from .losses import ce_term, loss_det, loss_pcl, loss_seg, prototype
from .peaks import extract_peaks

__all__ = [
    "TrainConfig",
    "TeacherStudent",
    "ema_update",
    "assemble_target_prompts",
    "dedup_points",
    "detection_threshold",
    "foreground_probability",
    "gen_det_pseudolabels",
    "gen_seg_pseudolabels",
    "sample_source_prompts",
    "seed_prompt_labels",
    "select_pcl_points",
    "uda_bootstrap_points",
    "fit",
    "train_step",
    "write_trace",
    "ce_term",
    "loss_det",
    "loss_pcl",
    "loss_seg",
    "prototype",
    "extract_peaks",
]
