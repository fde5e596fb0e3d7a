"""Command-line interface: dataset generation, preprocessing, training,
evaluation, and experiment sweeps.

Exit codes: 0 on success, 1 on any runtime failure (one-line diagnostic
on stderr), 2 for unusable arguments (argparse usage error).
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .classifier import CnnClassifier
from .data import (
    SynthConfig,
    generate_synthetic,
    load_directory,
    save_dataset,
    split_dataset,
)
from .experiments import ExperimentSpec, run_experiment, write_outputs
from .metrics import evaluate_predictions
from .nn.checkpoint import load_checkpoint
from .preprocessing import ImagePreprocessor, PreprocessMethod

SPLIT_FRACTIONS = (0.7, 0.15, 0.15)
SPLIT_SEED = 0

METHOD_NAMES = [m.value for m in PreprocessMethod]


def _add_train_flags(parser):
    parser.add_argument("--max-epochs", type=int, default=200,
                        help="epoch cap (default 200)")
    parser.add_argument("--patience", type=int, default=60,
                        help="early-stopping patience in epochs (default 60)")
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--learning-rate", type=float, default=1e-3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leafrust",
        description="Coffee leaf rust detection: data, training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic leaf dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--count", type=int, default=600)
    p.add_argument("--resolution", type=int, default=128)
    p.add_argument("--lesion-probability", type=float, default=0.5)
    p.add_argument("--lesion-count", type=int, nargs=2, default=None,
                   metavar=("LO", "HI"))
    p.add_argument("--lesion-diameter", type=int, nargs=2, default=None,
                   metavar=("LO", "HI"))
    p.add_argument("--lesion-strength", type=int, default=255)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="preprocess a dataset directory")
    p.add_argument("--data", required=True, help="input dataset directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--method", choices=METHOD_NAMES, default="edge-gray")
    p.add_argument("--resolution", type=int, default=128)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train one model on a dataset directory")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="checkpoint file to write")
    p.add_argument("--method", choices=METHOD_NAMES, default="edge-gray")
    p.add_argument("--resolution", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a directory")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--method", choices=METHOD_NAMES, default=None,
                   help="override the method stored in the checkpoint")
    p.add_argument("--resolution", type=int, default=None,
                   help="override the resolution stored in the checkpoint")
    p.add_argument("--out", default=None, help="write the report as JSON here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run an experiment spec")
    p.add_argument("--config", required=True, help="experiment JSON file")
    p.add_argument("--out", required=True, help="results directory")
    p.add_argument("--seeds", default=None,
                   help="comma-separated seed list overriding the config")
    p.add_argument("--max-epochs", type=int, default=None,
                   help="override the config's epoch cap")
    p.add_argument("--jobs", type=int, choices=[1], default=1,
                   help="worker count; rows always run serially in sweep "
                        "order, so only 1 is accepted")
    p.set_defaults(func=cmd_sweep)
    return parser


def _load_split_arrays(args):
    """Directory -> stratified split -> preprocessed arrays and labels."""
    samples = load_directory(args.data)
    split = split_dataset(samples, SPLIT_FRACTIONS, seed=SPLIT_SEED)
    pre = ImagePreprocessor(method=args.method, resolution=args.resolution)
    parts = {}
    for name, part in (("train", split.train), ("val", split.validation),
                       ("test", split.test)):
        x = pre.transform([s.image for s in part])
        y = np.array([s.label.value for s in part], dtype=np.int64)
        parts[name] = (x, y)
    return parts


def cmd_synth(args) -> int:
    fields = dict(
        count=args.count,
        resolution=args.resolution,
        lesion_probability=args.lesion_probability,
        lesion_strength=args.lesion_strength,
        seed=args.seed,
    )
    if args.lesion_count is not None:
        fields["lesion_count_range"] = tuple(args.lesion_count)
    if args.lesion_diameter is not None:
        fields["lesion_diameter_px"] = tuple(args.lesion_diameter)
    samples = generate_synthetic(SynthConfig(**fields))
    counts = save_dataset(samples, args.out)
    print(f"wrote {counts['healthy']} healthy + {counts['rust']} rust "
          f"images to {args.out}")
    return 0


def cmd_preprocess(args) -> int:
    samples = load_directory(args.data)
    pre = ImagePreprocessor(method=args.method, resolution=args.resolution)
    out_root = Path(args.out)
    arrays = pre.transform([s.image for s in samples])
    for sample, image in zip(samples, arrays):
        target_dir = out_root / sample.label.dirname
        target_dir.mkdir(parents=True, exist_ok=True)
        name = Path(sample.path).stem + ".png"
        Image.fromarray(image).save(target_dir / name)
    print(f"wrote {len(samples)} preprocessed images to {out_root}")
    return 0


def cmd_train(args) -> int:
    parts = _load_split_arrays(args)
    x_train, y_train = parts["train"]
    x_val, y_val = parts["val"]
    clf = CnnClassifier(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        seed=args.seed,
    )
    clf.fit(x_train, y_train, validation_data=(x_val, y_val))
    clf.save(args.out, meta={
        "method": args.method,
        "resolution": args.resolution,
    })
    report = clf.report_
    report_path = Path(args.out).with_suffix(".report.json")
    report_path.write_text(json.dumps(report.as_dict(), indent=2) + "\n")
    print(f"trained {report.stopped_epoch} epochs "
          f"(best {report.best_epoch}, val loss {report.best_val_loss:.6f}); "
          f"wrote {args.out} and {report_path}")
    return 0


def cmd_evaluate(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    clf = CnnClassifier.load(args.checkpoint)
    method = args.method or ckpt.meta.get("method")
    if method is None:
        raise ValueError(
            "checkpoint stores no preprocessing method; pass --method"
        )
    resolution = args.resolution or ckpt.meta.get(
        "resolution", ckpt.config.input_side
    )
    if resolution != ckpt.config.input_side:
        raise ValueError(
            f"checkpoint expects {ckpt.config.input_side}x"
            f"{ckpt.config.input_side} input but the requested resolution "
            f"is {resolution}x{resolution}"
        )
    samples = load_directory(args.data)
    pre = ImagePreprocessor(method=method, resolution=resolution)
    x = pre.transform([s.image for s in samples])
    actual = np.array([s.label.value for s in samples], dtype=np.int64)
    predicted = clf.predict(x)
    report = evaluate_predictions(actual, predicted)
    print(f"precision {report.precision:.3f}  recall {report.recall:.3f}  "
          f"f1 {report.f1:.3f}  dice {report.dice:.3f}")
    if args.out:
        payload = dict(report.as_dict(), method=method, resolution=resolution,
                       samples=len(samples))
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
        print(f"wrote {args.out}")
    return 0


def cmd_sweep(args) -> int:
    spec = ExperimentSpec.from_json(Path(args.config))
    if args.seeds is not None:
        seeds = tuple(int(s) for s in args.seeds.split(","))
        spec = dataclasses.replace(spec, seeds=seeds)
    if args.max_epochs is not None:
        train = dataclasses.replace(spec.train, max_epochs=args.max_epochs)
        spec = dataclasses.replace(spec, train=train)

    def progress(row):
        if row.error is None:
            m = row.metrics
            print(f"{row.label} seed {row.seed}: f1 {m.f1:.3f} "
                  f"dice {m.dice:.3f} ({row.wall_seconds:.1f}s, "
                  f"best epoch {row.best_epoch})", flush=True)
        else:
            print(f"{row.label} seed {row.seed}: FAILED {row.error}",
                  flush=True)

    result = run_experiment(spec, progress=progress)
    written = write_outputs(result, args.out)
    print(written["table"].read_text(), end="")
    names = ", ".join(str(p) for p in written.values())
    print(f"wrote {names}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
