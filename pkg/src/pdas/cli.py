"""Command-line entry points.

Subcommands: gen-data, train, eval, predict, serve, gradcheck. Results go to
stdout as JSON; diagnostics go to stderr. Exit codes: 0 success, 1 failure,
2 usage error (argparse's convention).
"""

from __future__ import annotations

import argparse
import base64
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .backbone.cases import ALL_CASES
from .backbone.gradcheck import gradcheck
from .inference.evaluate import evaluate
from .inference.rle import rle_encode, rle_to_base64
from .inference.sliding import interactive_predict
from .model.config import ModelConfig
from .model.network import PromptSegModel
from .service.app import create_app, segment_to_payload
from .synthdata.benchmark import (
    SOURCE_SEED,
    TARGET_SEED,
    TRAIN_SAMPLES,
    VAL_OFFSET,
    VAL_SAMPLES,
    source_spec,
    target_spec,
)
from .synthdata.generate import DomainSpec, generate_domain
from .synthdata.io import load_dataset, save_dataset
from .trainer.config import TrainConfig
from .trainer.loop import fit


def _fail(message: str) -> int:
    print(json.dumps({"error": message}), file=sys.stderr)
    return 1


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _spec_for(domain: str, split: str) -> DomainSpec:
    base = source_spec() if domain == "source" else target_spec()
    if split == "val":
        return type(base).from_dict({**base.to_dict(), "seed": base.seed + VAL_OFFSET})
    return base


def cmd_gen_data(args) -> int:
    spec = _spec_for(args.domain, args.split)
    if args.seed is not None:
        spec.seed = args.seed
    n = args.n if args.n is not None else (TRAIN_SAMPLES if args.split == "train" else VAL_SAMPLES)
    samples = generate_domain(spec, n, sparse_fraction=args.sparse_fraction)
    save_dataset(args.out, spec, samples, args.sparse_fraction)
    _emit(
        {
            "out": str(args.out),
            "domain": args.domain,
            "split": args.split,
            "n_samples": n,
            "seed": spec.seed,
        }
    )
    return 0


def cmd_train(args) -> int:
    overrides = {}
    if args.config is not None:
        overrides = json.loads(Path(args.config).read_text())
    for name in ("mode", "iterations", "seed", "base_lr", "batch_size"):
        v = getattr(args, name)
        if v is not None:
            overrides[name] = v
    for flag in ("use_pseudo_labels", "use_training_prompts", "use_pcl"):
        if getattr(args, f"no_{flag}"):
            overrides[flag] = False
    try:
        config = TrainConfig.from_dict({**TrainConfig().to_dict(), **overrides})
    except (TypeError, ValueError) as e:
        return _fail(f"bad training config: {e}")

    source, _ = load_dataset(args.source_data)
    target = None
    if args.target_data is not None:
        target, _ = load_dataset(args.target_data)
    try:
        _, trace = fit(
            config,
            source,
            target_train=target,
            model_config=ModelConfig(),
            init_checkpoint=args.init_checkpoint,
            out_dir=args.out,
        )
    except (ValueError, RuntimeError) as e:
        return _fail(str(e))
    _emit(
        {
            "out": str(args.out),
            "mode": config.mode,
            "iterations": config.iterations,
            "config_digest": config.digest(),
            "final_loss": trace[-1]["total"],
        }
    )
    return 0


def cmd_eval(args) -> int:
    model, step = PromptSegModel.load(args.checkpoint)
    samples, manifest = load_dataset(args.data)
    report = evaluate(
        model,
        samples,
        test_prompt_fraction=args.prompt_fraction,
        seed=args.seed,
        sample_ids=manifest["samples"],
    )
    report["checkpoint"] = str(args.checkpoint)
    report["model_step"] = step
    if args.out is not None:
        Path(args.out).write_text(json.dumps(report, indent=2))
    _emit(report)
    return 0


def _parse_points(specs: list[str]) -> list[tuple[int, int]]:
    points = []
    for s in specs:
        r, c = s.split(",")
        points.append((int(r), int(c)))
    return points


def cmd_predict(args) -> int:
    model, _ = PromptSegModel.load(args.checkpoint)
    image = np.asarray(Image.open(args.image).convert("L"), dtype=np.float64) / 255.0
    try:
        points = _parse_points(args.point)
    except ValueError:
        return _fail(f"points must look like ROW,COL; got {args.point}")
    try:
        pred = interactive_predict(model, image, points)
    except ValueError as e:
        return _fail(str(e))
    _emit(
        {
            "shape": list(image.shape),
            "format": args.format,
            "mask": segment_to_payload(pred.mask, args.format),
            "instance_count": int(pred.instances.max()),
        }
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    app = create_app(checkpoint=args.checkpoint)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_gradcheck(args) -> int:
    rng_seeds = list(range(args.seeds))
    worst = {}
    for name in sorted(ALL_CASES):
        errs = []
        for seed in rng_seeds:
            f, inputs = ALL_CASES[name](np.random.default_rng(seed))
            errs.append(gradcheck(f, inputs))
        worst[name] = max(errs)
    overall = max(worst.values())
    _emit(
        {
            "tolerance": args.tolerance,
            "seeds": args.seeds,
            "max_relative_error": overall,
            "per_primitive": {k: v for k, v in sorted(worst.items(), key=lambda kv: -kv[1])},
        }
    )
    return 0 if overall < args.tolerance else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdas", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a synthetic dataset directory")
    g.add_argument("--domain", choices=("source", "target"), required=True)
    g.add_argument("--split", choices=("train", "val"), default="train")
    g.add_argument("--n", type=int, default=None, help="sample count (split default)")
    g.add_argument("--seed", type=int, default=None, help="override the domain seed")
    g.add_argument("--sparse-fraction", type=float, default=0.15)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen_data)

    t = sub.add_parser("train", help="run a training job")
    t.add_argument("--source-data", required=True, help="dataset dir (gen-data output)")
    t.add_argument("--target-data", default=None)
    t.add_argument("--init-checkpoint", default=None)
    t.add_argument("--config", default=None, help="JSON file of TrainConfig fields")
    t.add_argument("--mode", choices=("supervised", "uda", "wda"), default=None)
    t.add_argument("--iterations", type=int, default=None)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--base-lr", type=float, default=None, dest="base_lr")
    t.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    t.add_argument("--no-use-pseudo-labels", action="store_true", dest="no_use_pseudo_labels")
    t.add_argument("--no-use-training-prompts", action="store_true", dest="no_use_training_prompts")
    t.add_argument("--no-use-pcl", action="store_true", dest="no_use_pcl")
    t.add_argument("--out", required=True)
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--prompt-fraction", type=float, default=0.0)
    e.add_argument("--seed", type=int, default=1234)
    e.add_argument("--out", default=None, help="also write the report here")
    e.set_defaults(fn=cmd_eval)

    pr = sub.add_parser("predict", help="segment one image file")
    pr.add_argument("--checkpoint", required=True)
    pr.add_argument("--image", required=True)
    pr.add_argument("--point", action="append", default=[], metavar="ROW,COL")
    pr.add_argument("--format", choices=("rle", "png"), default="rle")
    pr.set_defaults(fn=cmd_predict)

    s = sub.add_parser("serve", help="start the HTTP service")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.set_defaults(fn=cmd_serve)

    gc = sub.add_parser("gradcheck", help="finite-difference check of every primitive")
    gc.add_argument("--seeds", type=int, default=3)
    gc.add_argument("--tolerance", type=float, default=1e-4)
    gc.set_defaults(fn=cmd_gradcheck)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
