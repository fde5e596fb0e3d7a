"""The nine-layer classification network and its configuration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import (
    BatchNorm2d,
    Conv2d,
    Dense,
    Flatten,
    MaxPool2d,
    default_rng,
    softmax,
)


@dataclass(frozen=True)
class ModelConfig:
    """Shape of the network: conv, conv, pool, norm, flatten, 4x dense.

    dense_widths has exactly four entries; the last one is the number of
    classes. The flattened feature length is
    conv2_filters * (input_side // pool_stride) ** 2.
    """

    input_side: int
    input_channels: int = 1
    conv1_filters: int = 32
    conv2_filters: int = 64
    conv_kernel: int = 3
    pool_window: int = 2
    pool_stride: int = 2
    dense_widths: tuple = (128, 64, 32, 2)

    def __post_init__(self):
        object.__setattr__(self, "dense_widths", tuple(int(w) for w in self.dense_widths))
        for name in ("input_side", "input_channels", "conv1_filters",
                     "conv2_filters", "conv_kernel", "pool_window", "pool_stride"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.conv_kernel % 2 == 0:
            raise ValueError(f"conv_kernel must be odd, got {self.conv_kernel}")
        if self.pool_window != self.pool_stride:
            raise ValueError(
                f"pooling must be non-overlapping: window {self.pool_window} "
                f"!= stride {self.pool_stride}"
            )
        if len(self.dense_widths) != 4:
            raise ValueError(
                f"dense_widths needs exactly four entries, got {len(self.dense_widths)}"
            )
        if any(width < 1 for width in self.dense_widths):
            raise ValueError(f"dense widths must be positive, got {self.dense_widths}")
        if self.input_side < self.conv_kernel:
            raise ValueError(
                f"input side {self.input_side} is smaller than the "
                f"{self.conv_kernel}x{self.conv_kernel} kernel"
            )
        if self.input_side // self.pool_stride < 1:
            raise ValueError(
                f"input side {self.input_side} vanishes under pooling "
                f"stride {self.pool_stride}"
            )

    @property
    def n_classes(self) -> int:
        return self.dense_widths[-1]

    @property
    def feature_length(self) -> int:
        return self.conv2_filters * (self.input_side // self.pool_stride) ** 2


class ConvNet:
    """conv-conv-pool-norm-flatten-dense-dense-dense-dense.

    Both conv layers and the first three dense layers carry ReLU; the
    final dense layer emits raw logits. Parameter initialization draws
    from a single generator in a fixed layer order, so one seed pins
    every weight.
    """

    def __init__(self, config: ModelConfig, seed=0, rng=None, dtype=np.float32):
        if rng is None:
            rng = default_rng(seed)
        self.config = config
        self.dtype = np.dtype(dtype)
        k = config.conv_kernel
        widths = config.dense_widths
        self.conv1 = Conv2d(config.input_channels, config.conv1_filters, k,
                            activation="relu", rng=rng, dtype=dtype)
        self.conv2 = Conv2d(config.conv1_filters, config.conv2_filters, k,
                            activation="relu", rng=rng, dtype=dtype)
        self.pool = MaxPool2d(config.pool_window, config.pool_stride)
        self.norm = BatchNorm2d(config.conv2_filters, dtype=dtype)
        self.flatten = Flatten()
        features = config.feature_length
        self.fc1 = Dense(features, widths[0], activation="relu", rng=rng, dtype=dtype)
        self.fc2 = Dense(widths[0], widths[1], activation="relu", rng=rng, dtype=dtype)
        self.fc3 = Dense(widths[1], widths[2], activation="relu", rng=rng, dtype=dtype)
        self.fc4 = Dense(widths[2], widths[3], activation=None, rng=rng, dtype=dtype)
        self._sequence = [
            self.conv1, self.conv2, self.pool, self.norm, self.flatten,
            self.fc1, self.fc2, self.fc3, self.fc4,
        ]

    def forward(self, x, train=False) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 4:
            raise ValueError(f"expected NCHW input, got shape {x.shape}")
        side = self.config.input_side
        if x.shape[2] != side or x.shape[3] != side:
            raise ValueError(
                f"expected {side}x{side} input, got {x.shape[2]}x{x.shape[3]}"
            )
        for layer in self._sequence:
            x = layer.forward(x, train=train)
        return x

    def backward(self, dlogits) -> np.ndarray:
        grad = dlogits
        for layer in reversed(self._sequence):
            grad = layer.backward(grad)
        return grad

    def state_dict(self) -> dict:
        return {
            "conv1.w": self.conv1.w, "conv1.b": self.conv1.b,
            "conv2.w": self.conv2.w, "conv2.b": self.conv2.b,
            "norm.gamma": self.norm.gamma, "norm.beta": self.norm.beta,
            "norm.running_mean": self.norm.running_mean,
            "norm.running_var": self.norm.running_var,
            "fc1.w": self.fc1.w, "fc1.b": self.fc1.b,
            "fc2.w": self.fc2.w, "fc2.b": self.fc2.b,
            "fc3.w": self.fc3.w, "fc3.b": self.fc3.b,
            "fc4.w": self.fc4.w, "fc4.b": self.fc4.b,
        }

    def trainable(self) -> dict:
        state = self.state_dict()
        # running statistics are tracked, not trained
        state.pop("norm.running_mean")
        state.pop("norm.running_var")
        return state

    def grads(self) -> dict:
        return {
            "conv1.w": self.conv1.dw, "conv1.b": self.conv1.db,
            "conv2.w": self.conv2.dw, "conv2.b": self.conv2.db,
            "norm.gamma": self.norm.dgamma, "norm.beta": self.norm.dbeta,
            "fc1.w": self.fc1.dw, "fc1.b": self.fc1.db,
            "fc2.w": self.fc2.dw, "fc2.b": self.fc2.db,
            "fc3.w": self.fc3.dw, "fc3.b": self.fc3.db,
            "fc4.w": self.fc4.dw, "fc4.b": self.fc4.db,
        }

    def snapshot(self) -> dict:
        return {key: value.copy() for key, value in self.state_dict().items()}

    def load_state(self, state: dict) -> None:
        current = self.state_dict()
        missing = set(current) - set(state)
        if missing:
            raise ValueError(f"state is missing tensors: {sorted(missing)}")
        unexpected = set(state) - set(current)
        if unexpected:
            raise ValueError(f"state has unexpected tensors: {sorted(unexpected)}")
        for key, target in current.items():
            source = np.asarray(state[key])
            if source.shape != target.shape:
                raise ValueError(
                    f"tensor '{key}' has shape {source.shape}, "
                    f"model expects {target.shape}"
                )
            target[:] = source.astype(target.dtype)

    def predict_logits(self, x, batch_size=128) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[0] == 0:
            return np.zeros((0, self.config.n_classes), dtype=self.dtype)
        chunks = [
            self.forward(x[start : start + batch_size], train=False).copy()
            for start in range(0, x.shape[0], batch_size)
        ]
        return np.concatenate(chunks, axis=0)

    def predict_proba(self, x, batch_size=128) -> np.ndarray:
        return softmax(self.predict_logits(x, batch_size))

    def predict(self, x, batch_size=128) -> np.ndarray:
        return self.predict_logits(x, batch_size).argmax(axis=1)
