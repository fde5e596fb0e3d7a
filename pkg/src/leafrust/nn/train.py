"""Training loop: shuffled mini-batches, Adam, early stopping on
validation loss with best-weight restoration."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..validation import check_label_array
from .layers import softmax_cross_entropy
from .model import ConvNet, ModelConfig
from .optim import Adam


class TrainingDivergedError(RuntimeError):
    """Raised when a loss turns NaN or infinite."""


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings. Defaults match the reported experiments."""

    max_epochs: int = 200
    patience: int = 60
    learning_rate: float = 1e-3
    batch_size: int = 32
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    min_improvement: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be positive, got {self.max_epochs}")
        if self.patience < 1:
            raise ValueError(f"patience must be positive, got {self.patience}")
        if self.batch_size < 2:
            raise ValueError(
                f"batch_size must be at least 2 for batch normalization, "
                f"got {self.batch_size}"
            )
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.min_improvement < 0:
            raise ValueError(
                f"min_improvement must be non-negative, got {self.min_improvement}"
            )


@dataclass
class TrainReport:
    """Per-epoch history plus the early-stopping outcome.

    Epochs are 1-based. val_accuracy entries are None when an evaluation
    hook replaced the built-in validation pass.
    """

    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0
    best_val_loss: float = float("inf")
    restored_best: bool = False
    wall_seconds: float = 0.0

    def as_dict(self) -> dict:
        return {
            "train_loss": list(self.train_loss),
            "val_loss": list(self.val_loss),
            "val_accuracy": list(self.val_accuracy),
            "best_epoch": self.best_epoch,
            "stopped_epoch": self.stopped_epoch,
            "best_val_loss": self.best_val_loss,
            "restored_best": self.restored_best,
            "wall_seconds": self.wall_seconds,
        }


def _batch_slices(n, batch_size):
    """Contiguous index ranges; a final leftover of one sample is folded
    into the previous batch so batch statistics stay defined."""
    starts = list(range(0, n, batch_size))
    bounds = [(s, min(s + batch_size, n)) for s in starts]
    if len(bounds) > 1 and bounds[-1][1] - bounds[-1][0] == 1:
        last = bounds.pop()
        prev = bounds.pop()
        bounds.append((prev[0], last[1]))
    return bounds


def evaluate_loss(net: ConvNet, x, y, batch_size=128):
    """Mean cross-entropy and accuracy without touching training state."""
    n = x.shape[0]
    total = 0.0
    correct = 0
    for start, stop in _batch_slices(n, batch_size):
        logits = net.forward(x[start:stop], train=False)
        loss, _ = softmax_cross_entropy(logits, y[start:stop])
        total += loss * (stop - start)
        correct += int((logits.argmax(axis=1) == y[start:stop]).sum())
    return total / n, correct / n


def train_model(
    x_train,
    y_train,
    x_val,
    y_val,
    model_config: ModelConfig,
    train_config: TrainConfig,
    eval_hook=None,
):
    """Fit a fresh network and return (net, report).

    Training stops once the validation loss has not improved by more than
    min_improvement for `patience` consecutive epochs, or at max_epochs;
    the weights from the best epoch are restored either way. eval_hook,
    when given, replaces the validation pass: it receives (epoch, net)
    and must return the validation loss.
    """
    x_train = np.asarray(x_train, dtype=np.float32)
    if x_train.ndim != 4:
        raise ValueError(f"training inputs must be NCHW, got shape {x_train.shape}")
    n_train = x_train.shape[0]
    if n_train < 2:
        raise ValueError(f"need at least 2 training samples, got {n_train}")
    y_train = check_label_array(y_train, model_config.n_classes)
    if y_train.shape[0] != n_train:
        raise ValueError(
            f"{n_train} training images but {y_train.shape[0]} labels"
        )
    if eval_hook is None:
        if x_val is None or y_val is None:
            raise ValueError("validation data is required unless eval_hook is given")
        x_val = np.asarray(x_val, dtype=np.float32)
        y_val = check_label_array(y_val, model_config.n_classes)
        if x_val.shape[0] != y_val.shape[0]:
            raise ValueError(
                f"{x_val.shape[0]} validation images but {y_val.shape[0]} labels"
            )
        if x_val.shape[0] == 0:
            raise ValueError("validation set is empty")

    started = time.perf_counter()
    root = np.random.SeedSequence(train_config.seed)
    init_seq, shuffle_seq = root.spawn(2)
    net = ConvNet(model_config, rng=np.random.Generator(np.random.PCG64(init_seq)))
    shuffle_rng = np.random.Generator(np.random.PCG64(shuffle_seq))
    optimizer = Adam(
        net.trainable(),
        learning_rate=train_config.learning_rate,
        beta1=train_config.beta1,
        beta2=train_config.beta2,
        epsilon=train_config.epsilon,
    )

    report = TrainReport()
    best_state = None
    wait = 0
    epoch = 0
    for epoch in range(1, train_config.max_epochs + 1):
        order = shuffle_rng.permutation(n_train)
        epoch_loss = 0.0
        for batch_index, (start, stop) in enumerate(
            _batch_slices(n_train, train_config.batch_size)
        ):
            idx = order[start:stop]
            logits = net.forward(x_train[idx], train=True)
            loss, grad = softmax_cross_entropy(logits, y_train[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite training loss at epoch {epoch}, "
                    f"batch {batch_index + 1}"
                )
            net.backward(grad)
            optimizer.step(net.grads())
            epoch_loss += loss * (stop - start)
        report.train_loss.append(epoch_loss / n_train)

        if eval_hook is not None:
            val_loss = float(eval_hook(epoch, net))
            val_accuracy = None
        else:
            val_loss, val_accuracy = evaluate_loss(
                net, x_val, y_val, train_config.batch_size
            )
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(
                f"non-finite validation loss at epoch {epoch}"
            )
        report.val_loss.append(val_loss)
        report.val_accuracy.append(val_accuracy)

        if val_loss < report.best_val_loss - train_config.min_improvement:
            report.best_val_loss = val_loss
            report.best_epoch = epoch
            best_state = net.snapshot()
            wait = 0
        else:
            wait += 1
            if wait >= train_config.patience:
                break

    report.stopped_epoch = epoch
    if best_state is not None:
        net.load_state(best_state)
        report.restored_best = True
    report.wall_seconds = time.perf_counter() - started
    return net, report
