"""Mean-teacher training loop for supervised runs and domain adaptation."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..backbone import tensor as T
from ..backbone.optim import OptimizerState, adamw_step, poly_lr
from ..backbone.tensor import Tensor
from ..model.config import ModelConfig
from ..model.network import PromptSegModel
from ..synthdata.augment import (
    align_to_strong,
    apply_geometry_point,
    apply_view,
    draw_view,
    strengthen,
)
from ..synthdata.generate import Sample
from ..synthdata.prompts import PointPrompt
from .config import TrainConfig
from .ema import TeacherStudent
from .labels import (
    assemble_target_prompts,
    gen_det_pseudolabels,
    gen_seg_pseudolabels,
    sample_source_prompts,
    seed_prompt_labels,
    select_pcl_points,
    uda_bootstrap_points,
)
from .losses import loss_det, loss_pcl, loss_seg

Point = tuple[int, int]
TRACE_FIELDS = ("step", "lr", "loss_seg", "loss_det", "loss_pcl", "total")


def _step_rng(config: TrainConfig, step: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([config.seed, step]))


def _transform_points(points: list[Point], vt) -> list[Point]:
    out = []
    for r, c in points:
        moved = apply_geometry_point(r, c, vt)
        if moved is not None:
            out.append(moved)
    return out


def _mean_or_zero(values: list[Tensor]) -> Tensor:
    if not values:
        return Tensor(np.float64(0.0))
    total = values[0]
    for v in values[1:]:
        total = T.add(total, v)
    return T.scale(total, 1.0 / len(values))


def train_step(
    ts: TeacherStudent,
    state: OptimizerState,
    config: TrainConfig,
    step: int,
    source_batch: list[Sample],
    target_batch: list[tuple[Sample, list[Point], str]],
    rng: np.random.Generator,
) -> dict:
    """One optimization step.

    Source samples supervise the student directly on a strong view. Each
    target sample runs the teacher on a weak view (prompted with its sparse
    points), maps the teacher's outputs onto the student's strong view, and
    supervises the student with the resulting pseudo-labels, merged prompts,
    and contrastive pixels. Returns the scalar losses as floats.
    """
    student = ts.student
    crop = student.config.image_crop

    seg_src: list[tuple[Tensor, np.ndarray]] = []
    det_src: list[tuple[Tensor, np.ndarray]] = []
    seg_tgt: list[tuple[Tensor, np.ndarray, np.ndarray]] = []
    det_tgt: list[tuple[Tensor, np.ndarray]] = []
    pcl_terms: list[Tensor] = []

    for sample in source_batch:
        vt = draw_view(sample.image.shape[0], crop, "strong", rng)
        view = apply_view(sample, vt)
        prompts: list[PointPrompt] = []
        if config.use_training_prompts:
            prompts = sample_source_prompts(view.centers, rng)
        out = student.forward(view.image, prompts)
        seg_src.append((out.seg_logits, (view.instance_map > 0).astype(np.int64)))
        det_src.append((out.density, view.density))

    for sample, sparse_image_frame, provenance in target_batch:
        weak = draw_view(sample.image.shape[0], crop, "weak", rng)
        strong = strengthen(weak, rng)
        weak_view = apply_view(sample, weak)
        strong_view = apply_view(sample, strong)

        sparse_weak = _transform_points(sparse_image_frame, weak)
        sparse_strong = _transform_points(sparse_image_frame, strong)

        teacher_prompts = [
            PointPrompt(p, "task-prompt", provenance) for p in sparse_weak
        ]
        t_out = ts.teacher.forward(weak_view.image, teacher_prompts)
        seg_aligned = align_to_strong(t_out.seg_logits.data, weak, strong)
        den_aligned = align_to_strong(t_out.density.data, weak, strong)

        labels, confidence, ignore = gen_seg_pseudolabels(
            seg_aligned, config.seg_conf_threshold
        )
        det_target, merged_points = gen_det_pseudolabels(
            den_aligned, sparse_strong, config
        )

        student_prompts: list[PointPrompt] = []
        if config.use_training_prompts:
            detected = merged_points[len(sparse_strong) :]
            student_prompts = assemble_target_prompts(
                sparse_strong, detected, config, sparse_provenance=provenance
            )
        n_task = len(student_prompts)

        queries: list[Point] = []
        negatives: list[Point] = []
        if config.use_pcl and n_task and len(sparse_strong):
            queries, negatives = select_pcl_points(labels, confidence, config, rng)
            student_prompts = (
                student_prompts
                + [PointPrompt(q, "pcl-query", "detected") for q in queries]
                + [PointPrompt(n, "pcl-negative", "detected") for n in negatives]
            )

        s_out = student.forward(strong_view.image, student_prompts)
        if not config.use_pseudo_labels:
            ignore = np.ones_like(ignore)  # keep only the annotated seeds below
        if provenance in ("ground-truth", "bootstrap"):
            # sparse points are trusted foreground whether they came from an
            # annotator or from the high-precision source-model bootstrap
            seed_prompt_labels(labels, ignore, sparse_strong)
        seg_tgt.append((s_out.seg_logits, labels, ignore))
        det_tgt.append((s_out.density, det_target))

        if queries and negatives:
            z_task = student.project_embedding(s_out.task_tokens)
            z_pcl = student.project_embedding(s_out.pcl_tokens)
            z_sparse = T.slice_(z_task, slice(0, len(sparse_strong)))
            z_q = T.slice_(z_pcl, slice(0, len(queries)))
            z_n = T.slice_(z_pcl, slice(len(queries), len(queries) + len(negatives)))
            pcl_terms.append(loss_pcl(z_q, z_sparse, z_n, config.tau))

    l_seg = loss_seg(seg_src, seg_tgt)
    l_det = loss_det(det_src, det_tgt)
    l_pcl = _mean_or_zero(pcl_terms)
    total = T.add(
        T.add(T.scale(l_seg, config.lambda_seg), T.scale(l_det, config.lambda_det)),
        T.scale(l_pcl, config.lambda_pcl),
    )

    report = {
        "step": step,
        "lr": poly_lr(config.base_lr, step, config.iterations, config.poly_power),
        "loss_seg": float(l_seg.data),
        "loss_det": float(l_det.data),
        "loss_pcl": float(l_pcl.data),
        "total": float(total.data),
    }
    if not np.isfinite(report["total"]):
        raise RuntimeError(
            f"non-finite loss at step {step}: seg={report['loss_seg']} "
            f"det={report['loss_det']} pcl={report['loss_pcl']}"
        )

    student.zero_grads()
    total.backward()
    for p in student.params.values():
        if p.grad is None:
            p.grad = np.zeros_like(p.data)
    adamw_step(
        student.params,
        state,
        lr=report["lr"],
        weight_decay=config.weight_decay,
    )
    if config.mode != "supervised":
        ts.update_teacher(config.ema_momentum)
    ts.step += 1
    return report


def _load_or_bootstrap(
    model: PromptSegModel,
    model_step: int,
    target_train: list[Sample],
    config: TrainConfig,
    cache_path: Path | None,
) -> list[list[Point]]:
    if cache_path is not None and cache_path.exists():
        blob = json.loads(cache_path.read_text())
        if blob.get("digest") == config.digest() and len(blob["points"]) == len(target_train):
            return [[(int(r), int(c)) for r, c in pts] for pts in blob["points"]]
    points = uda_bootstrap_points(
        model, model_step, [s.image for s in target_train], config
    )
    if cache_path is not None:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        cache_path.write_text(
            json.dumps({"digest": config.digest(), "points": points})
        )
    return points


def write_trace(rows: list[dict], path: str | Path) -> None:
    lines = [",".join(TRACE_FIELDS)]
    for row in rows:
        lines.append(
            ",".join(
                str(row[f]) if f == "step" else repr(float(row[f]))
                for f in TRACE_FIELDS
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def fit(
    config: TrainConfig,
    source_train: list[Sample],
    target_train: list[Sample] | None = None,
    model_config: ModelConfig | None = None,
    init_checkpoint: str | Path | None = None,
    out_dir: str | Path | None = None,
) -> tuple[TeacherStudent, list[dict]]:
    """Run a full training job and return (models, loss trace).

    Supervised mode trains from scratch on the source domain. Adaptation
    modes (uda/wda) must start from a source checkpoint; wda uses the target
    samples' sparse points, uda bootstraps points by running the source
    model's detector over the target images once (cached under out_dir).
    """
    config.validate()
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    if init_checkpoint is not None:
        student, init_step = PromptSegModel.load(init_checkpoint)
    else:
        if config.mode != "supervised":
            raise ValueError(f"{config.mode} adaptation requires a source checkpoint")
        if model_config is None:
            raise ValueError("model_config is required when training from scratch")
        student, init_step = PromptSegModel.init(model_config, seed=config.seed), 0

    if config.mode == "supervised":
        target_entries: list[tuple[Sample, list[Point], str]] = []
    else:
        if not target_train:
            raise ValueError(f"{config.mode} mode requires target samples")
        if config.mode == "wda":
            target_entries = [
                (s, [tuple(p) for p in s.sparse_points], "ground-truth")
                for s in target_train
            ]
        else:
            cache = out / "bootstrap.json" if out is not None else None
            boot = _load_or_bootstrap(student, init_step, target_train, config, cache)
            target_entries = [
                (s, pts, "bootstrap") for s, pts in zip(target_train, boot)
            ]

    ts = TeacherStudent.from_student(student)
    state = OptimizerState()
    trace: list[dict] = []
    for step in range(config.iterations):
        rng = _step_rng(config, step)
        src_idx = rng.choice(
            len(source_train),
            size=min(config.batch_size, len(source_train)),
            replace=False,
        )
        source_batch = [source_train[int(i)] for i in src_idx]
        target_batch: list[tuple[Sample, list[Point], str]] = []
        if target_entries:
            tgt_idx = rng.choice(
                len(target_entries),
                size=min(config.batch_size, len(target_entries)),
                replace=False,
            )
            target_batch = [target_entries[int(i)] for i in tgt_idx]
        trace.append(
            train_step(ts, state, config, step, source_batch, target_batch, rng)
        )
        if out is not None and (step + 1) % config.checkpoint_every == 0:
            ts.student.save(out / f"step_{step + 1:06d}.ckpt", step=step + 1)

    if out is not None:
        ts.student.save(out / "final_student.ckpt", step=config.iterations)
        if config.mode != "supervised":
            ts.teacher.save(out / "final_teacher.ckpt", step=config.iterations)
        write_trace(trace, out / "trace.csv")
        (out / "train_config.json").write_text(json.dumps(config.to_dict(), indent=2))
    return ts, trace
