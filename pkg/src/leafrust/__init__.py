"""Early detection of coffee leaf rust from leaf photos.

Preprocessing emphasizes lesion edges with a high-pass filter, a small
convolutional network does the classification, and a sweep harness
compares input resolutions and preprocessing variants.
"""

__version__ = "0.1.0"

from .classifier import CnnClassifier, as_batch
from .data import (
    Label,
    RawSample,
    SynthConfig,
    generate_synthetic,
    load_directory,
    save_dataset,
    split_dataset,
)
from .experiments import (
    ExperimentResult,
    ExperimentSpec,
    render_table,
    run_experiment,
    write_outputs,
)
from .metrics import (
    Averaging,
    MetricsReport,
    compute_metrics,
    confusion_matrix,
    evaluate_predictions,
)
from .preprocessing import (
    DEFAULT_KERNEL,
    ImagePreprocessor,
    PreprocessConfig,
    PreprocessMethod,
    convolve2d,
    histogram_equalize,
    min_max_normalize,
    preprocess,
    preprocess_stages,
    resize,
    to_grayscale,
)

__all__ = [
    "Averaging",
    "CnnClassifier",
    "DEFAULT_KERNEL",
    "ExperimentResult",
    "ExperimentSpec",
    "ImagePreprocessor",
    "Label",
    "MetricsReport",
    "PreprocessConfig",
    "PreprocessMethod",
    "RawSample",
    "SynthConfig",
    "as_batch",
    "compute_metrics",
    "confusion_matrix",
    "convolve2d",
    "evaluate_predictions",
    "generate_synthetic",
    "histogram_equalize",
    "load_directory",
    "min_max_normalize",
    "preprocess",
    "preprocess_stages",
    "render_table",
    "resize",
    "run_experiment",
    "save_dataset",
    "split_dataset",
    "to_grayscale",
    "write_outputs",
    "__version__",
]
