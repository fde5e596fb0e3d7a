from .layers import (
    BatchNorm2d,
    Conv2d,
    Dense,
    Flatten,
    MaxPool2d,
    he_uniform,
    softmax,
    softmax_cross_entropy,
)
from .model import ConvNet, ModelConfig
from .optim import Adam
from .train import (
    TrainConfig,
    TrainReport,
    TrainingDivergedError,
    evaluate_loss,
    train_model,
)
from .checkpoint import (
    Checkpoint,
    CheckpointError,
    load_checkpoint,
    load_model,
    save_checkpoint,
    save_model,
)

__all__ = [
    "Adam",
    "BatchNorm2d",
    "Checkpoint",
    "CheckpointError",
    "Conv2d",
    "ConvNet",
    "Dense",
    "Flatten",
    "MaxPool2d",
    "ModelConfig",
    "TrainConfig",
    "TrainReport",
    "TrainingDivergedError",
    "evaluate_loss",
    "he_uniform",
    "load_checkpoint",
    "load_model",
    "save_checkpoint",
    "save_model",
    "softmax",
    "softmax_cross_entropy",
    "train_model",
]
