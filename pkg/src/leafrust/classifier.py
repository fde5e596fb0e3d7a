"""High-level image classifier wrapping the convolutional network.

CnnClassifier glues the preprocessed-image tensors to the training loop
with scikit-learn estimator conventions: constructor stores
hyperparameters untouched, fit learns state into underscore attributes,
predict maps back to the original label values.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .nn.checkpoint import load_checkpoint, save_model
from .nn.model import ConvNet, ModelConfig
from .nn.train import TrainConfig, train_model


def as_batch(x) -> np.ndarray:
    """Coerce a stack of preprocessed images to float32 NCHW in [0, 1].

    Accepts (N, H, W) grayscale stacks, (N, H, W, C) channels-last
    stacks with 1 or 3 channels, or ready-made (N, C, H, W) arrays.
    8-bit intensities are divided by 255; float input is taken as
    already scaled.
    """
    x = np.asarray(x)
    if x.ndim == 3:
        x = x[:, None, :, :]
    elif x.ndim == 4:
        if x.shape[-1] in (1, 3) and x.shape[1] not in (1, 3):
            x = np.transpose(x, (0, 3, 1, 2))
    else:
        raise ValueError(
            f"expected a stack of images with 3 or 4 axes, got shape {x.shape}"
        )
    if x.shape[1] not in (1, 3):
        raise ValueError(f"expected 1 or 3 channels, got shape {x.shape}")
    if np.issubdtype(x.dtype, np.integer):
        return np.ascontiguousarray(x, dtype=np.float32) / np.float32(255.0)
    return np.ascontiguousarray(x, dtype=np.float32)


def _stratified_holdout(y, fraction, seed):
    """Per-class shuffled split of indices into (train, holdout)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 929])))
    train_idx = []
    val_idx = []
    for value in np.unique(y):
        members = np.flatnonzero(y == value)
        if members.size < 2:
            raise ValueError(
                f"class {value} has {members.size} sample(s); need at least 2 "
                f"to carve a validation split"
            )
        members = rng.permutation(members)
        n_val = max(1, int(round(fraction * members.size)))
        if n_val >= members.size:
            n_val = members.size - 1
        val_idx.append(members[:n_val])
        train_idx.append(members[n_val:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(val_idx))


class CnnClassifier(BaseEstimator, ClassifierMixin):
    """Two-conv CNN classifier for preprocessed leaf images.

    fit expects images as produced by ImagePreprocessor.transform (8-bit,
    channels-last or plain grayscale). A validation split is carved from
    the training data unless validation_data supplies one explicitly.
    Training is deterministic for a fixed seed.
    """

    def __init__(self, conv1_filters=32, conv2_filters=64, kernel_size=3,
                 dense_widths=(128, 64, 32), learning_rate=1e-3,
                 batch_size=32, max_epochs=200, patience=60,
                 min_improvement=1e-6, beta1=0.9, beta2=0.999,
                 epsilon=1e-8, validation_fraction=0.15, seed=0):
        self.conv1_filters = conv1_filters
        self.conv2_filters = conv2_filters
        self.kernel_size = kernel_size
        self.dense_widths = dense_widths
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.min_improvement = min_improvement
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.validation_fraction = validation_fraction
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            max_epochs=self.max_epochs,
            patience=self.patience,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
            min_improvement=self.min_improvement,
            seed=self.seed,
        )

    def _model_config(self, side, channels) -> ModelConfig:
        widths = tuple(int(w) for w in self.dense_widths)
        return ModelConfig(
            input_side=side,
            input_channels=channels,
            conv1_filters=self.conv1_filters,
            conv2_filters=self.conv2_filters,
            conv_kernel=self.kernel_size,
            dense_widths=widths + (len(self.classes_),),
        )

    def fit(self, X, y, validation_data=None):
        x = as_batch(X)
        y = np.asarray(y)
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise ValueError(
                f"{x.shape[0]} images but labels have shape {y.shape}"
            )
        if x.shape[2] != x.shape[3]:
            raise ValueError(
                f"images must be square, got {x.shape[2]}x{x.shape[3]}"
            )
        self.classes_ = np.unique(y)
        if self.classes_.size < 2:
            raise ValueError("training data must contain at least 2 classes")
        encoded = np.searchsorted(self.classes_, y)

        if validation_data is not None:
            x_val = as_batch(validation_data[0])
            y_val = np.searchsorted(
                self.classes_, np.asarray(validation_data[1])
            )
            x_train, y_train = x, encoded
        else:
            if not 0.0 < self.validation_fraction < 1.0:
                raise ValueError(
                    f"validation_fraction must lie in (0, 1), got "
                    f"{self.validation_fraction}"
                )
            train_idx, val_idx = _stratified_holdout(
                encoded, self.validation_fraction, self.seed
            )
            x_train, y_train = x[train_idx], encoded[train_idx]
            x_val, y_val = x[val_idx], encoded[val_idx]

        config = self._model_config(x.shape[2], x.shape[1])
        self.net_, self.report_ = train_model(
            x_train, y_train, x_val, y_val, config, self._train_config()
        )
        self.n_features_in_ = int(np.prod(x.shape[1:]))
        return self

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise NotFittedError(
                "this CnnClassifier is not fitted yet; call fit first"
            )

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        return self.net_.predict_proba(as_batch(X))

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        return self.classes_[self.net_.predict(as_batch(X))]

    def save(self, path, meta=None) -> None:
        """Write the fitted network to a checkpoint file."""
        self._check_fitted()
        merged = {"classes": [int(c) for c in self.classes_]}
        if meta:
            merged.update(meta)
        save_model(path, self.net_, seed=self.seed, meta=merged)

    @classmethod
    def load(cls, path) -> "CnnClassifier":
        """Rebuild a fitted classifier from a checkpoint file.

        Architecture hyperparameters are recovered from the stored model
        config; training-only hyperparameters keep their defaults.
        """
        ckpt = load_checkpoint(path)
        config = ckpt.config
        estimator = cls(
            conv1_filters=config.conv1_filters,
            conv2_filters=config.conv2_filters,
            kernel_size=config.conv_kernel,
            dense_widths=config.dense_widths[:-1],
            seed=0 if ckpt.seed is None else ckpt.seed,
        )
        net = ConvNet(config, seed=0)
        net.load_state(ckpt.tensors)
        estimator.net_ = net
        classes = ckpt.meta.get("classes")
        if classes is None:
            classes = list(range(config.n_classes))
        estimator.classes_ = np.asarray(classes)
        estimator.n_features_in_ = int(
            config.input_channels * config.input_side**2
        )
        return estimator
