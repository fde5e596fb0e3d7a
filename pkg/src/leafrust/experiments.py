"""Experiment driver: resolution and method sweeps with rendered tables.

An ExperimentSpec names a dataset source (directory or synthetic
config), one sweep axis, training settings, and a seed list. Running it
trains one classifier per (sweep value, seed) pair and collects held-out
metrics into rows; rows render as a median-over-seeds table in the style
precision/recall/F1/Dice reports are usually printed.

All outputs except wall-clock timings are deterministic functions of the
spec, so repeated runs produce byte-identical row files.
"""

import dataclasses
import json
import time
from pathlib import Path

import numpy as np

from .classifier import CnnClassifier
from .data import SynthConfig, generate_synthetic, load_directory, split_dataset
from .metrics import MetricsReport, evaluate_predictions
from .nn.train import TrainConfig
from .preprocessing import ImagePreprocessor, PreprocessMethod

RESOLUTION_AXIS = "resolutions"
METHOD_AXIS = "methods"

DEFAULT_RESOLUTIONS = (64, 84, 128)
DEFAULT_METHODS = tuple(m.value for m in PreprocessMethod)

# Non-swept axis defaults: the method sweep runs at the best resolution
# and the resolution sweep uses the strongest preprocessing chain.
DEFAULT_FIXED_RESOLUTION = 128
DEFAULT_FIXED_METHOD = "edge-gray"

SPLIT_FRACTIONS = (0.7, 0.15, 0.15)
SPLIT_SEED = 0


class ExperimentError(ValueError):
    """Raised for an invalid experiment specification."""


@dataclasses.dataclass(frozen=True)
class ExperimentSpec:
    """Full description of one sweep: data, axis, training, seeds."""

    dataset: object
    axis: str
    values: tuple
    method: str = DEFAULT_FIXED_METHOD
    resolution: int = DEFAULT_FIXED_RESOLUTION
    train: TrainConfig = TrainConfig()
    seeds: tuple = (1, 2, 3)
    model: dict | None = None

    def __post_init__(self):
        if self.axis not in (RESOLUTION_AXIS, METHOD_AXIS):
            raise ExperimentError(
                f"sweep axis must be '{RESOLUTION_AXIS}' or '{METHOD_AXIS}', "
                f"got {self.axis!r}"
            )
        if not self.values:
            raise ExperimentError("sweep values must be nonempty")
        if not self.seeds:
            raise ExperimentError("seed list must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ExperimentError(f"duplicate seeds in {self.seeds}")
        if self.axis == RESOLUTION_AXIS:
            bad = [v for v in self.values if not isinstance(v, int) or v < 8]
            if bad:
                raise ExperimentError(f"bad resolution values: {bad}")
        else:
            known = set(DEFAULT_METHODS)
            bad = [v for v in self.values if v not in known]
            if bad:
                raise ExperimentError(
                    f"unknown methods {bad}; choose from {sorted(known)}"
                )
        if not isinstance(self.dataset, (SynthConfig, str, Path)):
            raise ExperimentError(
                "dataset must be a directory path or a synthetic config"
            )
        allowed = {"conv1_filters", "conv2_filters", "kernel_size", "dense_widths"}
        unknown = set(self.model or {}) - allowed
        if unknown:
            raise ExperimentError(
                f"unknown model keys: {sorted(unknown)}; "
                f"choose from {sorted(allowed)}"
            )

    def row_settings(self, value):
        """(method, resolution) for one sweep value."""
        if self.axis == RESOLUTION_AXIS:
            return self.method, int(value)
        return str(value), self.resolution

    @staticmethod
    def value_label(value) -> str:
        return f"{value}x{value}" if isinstance(value, int) else str(value)

    @classmethod
    def from_json(cls, source) -> "ExperimentSpec":
        """Parse a spec from a JSON file path, JSON text, or dict.

        Schema (all keys except dataset and sweep.axis optional):
          dataset: {"directory": str} | {"synthetic": {SynthConfig fields}}
          sweep: {"axis": "resolutions"|"methods", "values": [...]}
          method: fixed method for a resolution sweep
          resolution: fixed resolution for a method sweep
          train: {TrainConfig fields except seed}
          seeds: [int, ...]
          model: {conv1_filters, conv2_filters, kernel_size, dense_widths}
        """
        if isinstance(source, (str, Path)) and str(source).lstrip().startswith("{"):
            payload = json.loads(str(source))
        elif isinstance(source, (str, Path)):
            payload = json.loads(Path(source).read_text())
        else:
            payload = dict(source)
        if not isinstance(payload, dict):
            raise ExperimentError("experiment config must be a JSON object")
        unknown = set(payload) - {
            "dataset", "sweep", "method", "resolution", "train", "seeds",
            "model",
        }
        if unknown:
            raise ExperimentError(f"unknown config keys: {sorted(unknown)}")

        dataset_field = payload.get("dataset")
        if not isinstance(dataset_field, dict) or len(dataset_field) != 1:
            raise ExperimentError(
                "dataset must be {'directory': path} or {'synthetic': {...}}"
            )
        (kind, body), = dataset_field.items()
        if kind == "directory":
            dataset = str(body)
        elif kind == "synthetic":
            try:
                body = dict(body or {})
                if "lesion_count_range" in body:
                    body["lesion_count_range"] = tuple(body["lesion_count_range"])
                if "lesion_diameter_px" in body:
                    body["lesion_diameter_px"] = tuple(body["lesion_diameter_px"])
                dataset = SynthConfig(**body)
            except (TypeError, ValueError) as exc:
                raise ExperimentError(f"bad synthetic dataset config: {exc}") from exc
        else:
            raise ExperimentError(f"unknown dataset kind {kind!r}")

        sweep = payload.get("sweep") or {}
        axis = sweep.get("axis")
        if axis is None:
            raise ExperimentError("sweep.axis is required")
        values = sweep.get("values")
        if values is None:
            values = DEFAULT_RESOLUTIONS if axis == RESOLUTION_AXIS else DEFAULT_METHODS
        unknown = set(sweep) - {"axis", "values"}
        if unknown:
            raise ExperimentError(f"unknown sweep keys: {sorted(unknown)}")

        train_fields = dict(payload.get("train") or {})
        if "seed" in train_fields:
            raise ExperimentError(
                "train.seed is driven by the seeds list; remove it"
            )
        try:
            train = TrainConfig(**train_fields)
        except (TypeError, ValueError) as exc:
            raise ExperimentError(f"bad train config: {exc}") from exc

        model = payload.get("model")
        if model is not None:
            model = dict(model)
            if "dense_widths" in model:
                model["dense_widths"] = tuple(model["dense_widths"])

        return cls(
            dataset=dataset,
            axis=str(axis),
            values=tuple(values),
            method=payload.get("method", DEFAULT_FIXED_METHOD),
            resolution=int(payload.get("resolution", DEFAULT_FIXED_RESOLUTION)),
            train=train,
            seeds=tuple(payload.get("seeds", (1, 2, 3))),
            model=model,
        )

    def to_json(self) -> str:
        if isinstance(self.dataset, SynthConfig):
            dataset = {"synthetic": dataclasses.asdict(self.dataset)}
        else:
            dataset = {"directory": str(self.dataset)}
        train = dataclasses.asdict(self.train)
        train.pop("seed")
        payload = {
            "dataset": dataset,
            "sweep": {"axis": self.axis, "values": list(self.values)},
            "method": self.method,
            "resolution": self.resolution,
            "train": train,
            "seeds": list(self.seeds),
        }
        if self.model:
            model = dict(self.model)
            if "dense_widths" in model:
                model["dense_widths"] = list(model["dense_widths"])
            payload["model"] = model
        return json.dumps(payload, indent=2, sort_keys=True)


@dataclasses.dataclass
class ExperimentRow:
    """Outcome of one (sweep value, seed) training run."""

    label: str
    seed: int
    metrics: MetricsReport | None = None
    best_epoch: int = 0
    stopped_epoch: int = 0
    wall_seconds: float = 0.0
    error: str | None = None


@dataclasses.dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list

    @property
    def labels(self) -> list:
        """Sweep-value labels in run order."""
        return [ExperimentSpec.value_label(v) for v in self.spec.values]


def _load_samples(spec: ExperimentSpec):
    if isinstance(spec.dataset, SynthConfig):
        return generate_synthetic(spec.dataset)
    return load_directory(spec.dataset)


def run_experiment(spec: ExperimentSpec, progress=None) -> ExperimentResult:
    """Train and evaluate every (sweep value, seed) pair of the spec.

    A failure in one row is recorded on that row; remaining rows still
    run. `progress`, if given, is called with each finished row.
    """
    samples = _load_samples(spec)
    split = split_dataset(samples, SPLIT_FRACTIONS, seed=SPLIT_SEED)
    parts = {
        "train": split.train,
        "val": split.validation,
        "test": split.test,
    }
    labels = {
        name: np.array([s.label.value for s in part], dtype=np.int64)
        for name, part in parts.items()
    }

    rows = []
    for value in spec.values:
        method, resolution = spec.row_settings(value)
        label = ExperimentSpec.value_label(value)
        pre = ImagePreprocessor(method=method, resolution=resolution)
        try:
            arrays = {
                name: pre.transform([s.image for s in part])
                for name, part in parts.items()
            }
            stage_error = None
        except Exception as exc:
            arrays = None
            stage_error = f"{type(exc).__name__}: {exc}"
        for seed in spec.seeds:
            row = ExperimentRow(label=label, seed=int(seed))
            started = time.perf_counter()
            if stage_error is not None:
                row.error = stage_error
                rows.append(row)
                if progress is not None:
                    progress(row)
                continue
            try:
                clf = CnnClassifier(
                    learning_rate=spec.train.learning_rate,
                    batch_size=spec.train.batch_size,
                    max_epochs=spec.train.max_epochs,
                    patience=spec.train.patience,
                    min_improvement=spec.train.min_improvement,
                    beta1=spec.train.beta1,
                    beta2=spec.train.beta2,
                    epsilon=spec.train.epsilon,
                    seed=int(seed),
                    **(spec.model or {}),
                )
                clf.fit(
                    arrays["train"], labels["train"],
                    validation_data=(arrays["val"], labels["val"]),
                )
                predicted = clf.predict(arrays["test"])
                row.metrics = evaluate_predictions(labels["test"], predicted)
                row.best_epoch = clf.report_.best_epoch
                row.stopped_epoch = clf.report_.stopped_epoch
            except Exception as exc:
                row.error = f"{type(exc).__name__}: {exc}"
            row.wall_seconds = time.perf_counter() - started
            rows.append(row)
            if progress is not None:
                progress(row)
    return ExperimentResult(spec=spec, rows=rows)


def _median_rows(result: ExperimentResult):
    """(label, medians dict) per sweep value, skipping failed rows."""
    out = []
    for label in result.labels:
        good = [r.metrics for r in result.rows if r.label == label and r.metrics]
        if not good:
            continue
        out.append((
            label,
            {
                name: float(np.median([getattr(m, name) for m in good]))
                for name in ("precision", "recall", "f1", "dice")
            },
        ))
    return out


def render_table(result: ExperimentResult, format="text") -> str:
    """Median-over-seeds summary, one line per sweep value.

    text pads the label column to the widest label; csv uses the same
    3-decimal cells, so parsing a cell and reprinting it is lossless.
    """
    if format not in ("text", "csv"):
        raise ValueError(f"format must be 'text' or 'csv', got {format!r}")
    title = "Resolution" if result.spec.axis == RESOLUTION_AXIS else "Method"
    medians = _median_rows(result)
    if format == "csv":
        lines = [f"{title},Precision,Recall,F1,Dice"]
        for label, cells in medians:
            lines.append(
                f"{label},{cells['precision']:.3f},{cells['recall']:.3f},"
                f"{cells['f1']:.3f},{cells['dice']:.3f}"
            )
        return "\n".join(lines) + "\n"
    width = max([len(label) for label, _ in medians], default=0)
    lines = [f"{title}  Precision  Recall  F1  Dice"]
    for label, cells in medians:
        lines.append(
            f"{label:<{width}}  {cells['precision']:.3f}  {cells['recall']:.3f}"
            f"  {cells['f1']:.3f}  {cells['dice']:.3f}"
        )
    return "\n".join(lines) + "\n"


def write_outputs(result: ExperimentResult, out_dir) -> dict:
    """Write rows.csv, table.txt, timing.csv, and failures.csv if needed.

    rows.csv carries full-precision metric values and no timing columns,
    so reruns of the same spec produce byte-identical files; wall-clock
    lives in timing.csv. Returns {name: path} for everything written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}

    lines = ["method_or_resolution,seed,precision,recall,f1,dice"]
    for row in result.rows:
        if row.metrics is None:
            continue
        m = row.metrics
        lines.append(
            f"{row.label},{row.seed},{m.precision!r},{m.recall!r},"
            f"{m.f1!r},{m.dice!r}"
        )
    rows_path = out_dir / "rows.csv"
    rows_path.write_text("\n".join(lines) + "\n")
    written["rows"] = rows_path

    table_path = out_dir / "table.txt"
    table_path.write_text(render_table(result, "text"))
    written["table"] = table_path

    lines = ["method_or_resolution,seed,wall_seconds,best_epoch,stopped_epoch"]
    for row in result.rows:
        lines.append(
            f"{row.label},{row.seed},{row.wall_seconds:.3f},"
            f"{row.best_epoch},{row.stopped_epoch}"
        )
    timing_path = out_dir / "timing.csv"
    timing_path.write_text("\n".join(lines) + "\n")
    written["timing"] = timing_path

    failures = [r for r in result.rows if r.error is not None]
    if failures:
        lines = ["method_or_resolution,seed,error"]
        for row in failures:
            reason = row.error.replace("\n", " ").replace(",", ";")
            lines.append(f"{row.label},{row.seed},{reason}")
        failures_path = out_dir / "failures.csv"
        failures_path.write_text("\n".join(lines) + "\n")
        written["failures"] = failures_path
    return written
