"""Network building blocks on plain numpy arrays.

Layers hold their parameters and gradients as attributes and cache
whatever the backward pass needs. Activations live inside the layer that
produced them. All feature maps are NCHW. Convolutions are
cross-correlations: kernels are applied as written, never flipped.

Layers default to float32; float64 exists for gradient checking, where
single precision would drown the finite-difference signal.
"""

from __future__ import annotations

import numpy as np


def default_rng(seed=0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def he_uniform(rng, shape, fan_in, dtype) -> np.ndarray:
    """Uniform init on [-sqrt(6/fan_in), +sqrt(6/fan_in)]."""
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, shape).astype(dtype)


def _check_activation(activation):
    if activation not in (None, "relu"):
        raise ValueError(f"unsupported activation {activation!r}")
    return activation


class Conv2d:
    """Same-padded convolution with optional fused ReLU.

    Works sample by sample: each image is unrolled into a column matrix
    and hit with one GEMM, which keeps peak scratch memory at a few
    megabytes instead of materializing the whole batch unrolled.
    """

    def __init__(self, in_channels, out_channels, kernel_size=3,
                 activation="relu", rng=None, dtype=np.float32):
        if kernel_size < 1 or kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd and positive, got {kernel_size}")
        rng = rng if rng is not None else default_rng()
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.kernel_size = int(kernel_size)
        self.activation = _check_activation(activation)
        fan_in = in_channels * kernel_size * kernel_size
        self.w = he_uniform(rng, (out_channels, in_channels, kernel_size, kernel_size),
                            fan_in, dtype)
        self.b = np.zeros(out_channels, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._shape_key = None
        self._mask = None

    def _ensure_scratch(self, n, h, w):
        key = (n, h, w)
        if self._shape_key == key:
            return
        c, f, k = self.in_channels, self.out_channels, self.kernel_size
        pad = k // 2
        dt = self.w.dtype
        self._xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=dt)
        # one sample's unrolled patches; rebuilt per sample in backward,
        # which is far cheaper than keeping the whole batch unrolled
        self._cols = np.empty((c * k * k, h * w), dtype=dt)
        self._out = np.empty((n, f, h, w), dtype=dt)
        self._dxp = None
        self._dcols = None
        self._dmasked = None
        self._dwtmp = None
        self._shape_key = key

    def _im2col(self, padded_image, cols, h, w):
        k = self.kernel_size
        view = cols.reshape(self.in_channels, k, k, h, w)
        for i in range(k):
            for j in range(k):
                view[:, i, j] = padded_image[:, i : i + h, j : j + w]

    def forward(self, x, train=False):
        x = np.asarray(x)
        if x.ndim != 4:
            raise ValueError(f"expected NCHW input, got shape {x.shape}")
        if x.shape[1] != self.in_channels:
            raise ValueError(
                f"input has {x.shape[1]} channel(s), layer expects {self.in_channels}"
            )
        n, _, h, w = x.shape
        k = self.kernel_size
        if h < k or w < k:
            raise ValueError(f"input {h}x{w} is smaller than the {k}x{k} kernel")
        pad = k // 2
        self._ensure_scratch(n, h, w)
        xp = self._xp
        xp[:, :, pad : pad + h, pad : pad + w] = x
        wmat = self.w.reshape(self.out_channels, -1)
        out = self._out
        cols = self._cols
        for i in range(n):
            self._im2col(xp[i], cols, h, w)
            np.matmul(wmat, cols, out=out[i].reshape(self.out_channels, -1))
        out += self.b[:, None, None]
        if self.activation == "relu":
            np.maximum(out, 0.0, out=out)
            if train:
                self._mask = out > 0
        return out

    def backward(self, dout):
        n, f, h, w = dout.shape
        k = self.kernel_size
        pad = k // 2
        if self._dxp is None or self._dxp.shape != self._xp.shape:
            self._dxp = np.zeros_like(self._xp)
            self._dcols = np.empty_like(self._cols)
            self._dwtmp = np.empty((f, self.in_channels * k * k), dtype=self.w.dtype)
        if self.activation == "relu":
            if self._dmasked is None or self._dmasked.shape != dout.shape:
                self._dmasked = np.empty_like(dout)
            np.multiply(dout, self._mask, out=self._dmasked)
            dout = self._dmasked
        np.sum(dout, axis=(0, 2, 3), out=self.db)
        wmat = self.w.reshape(f, -1)
        dwmat = np.zeros_like(wmat)
        dxp = self._dxp
        dxp[:] = 0.0
        cols = self._cols
        for i in range(n):
            self._im2col(self._xp[i], cols, h, w)
            dout_i = dout[i].reshape(f, -1)
            np.matmul(dout_i, cols.T, out=self._dwtmp)
            dwmat += self._dwtmp
            np.matmul(wmat.T, dout_i, out=self._dcols)
            dview = self._dcols.reshape(self.in_channels, k, k, h, w)
            target = dxp[i]
            for ki in range(k):
                for kj in range(k):
                    target[:, ki : ki + h, kj : kj + w] += dview[:, ki, kj]
        self.dw[:] = dwmat.reshape(self.w.shape)
        return dxp[:, :, pad : pad + h, pad : pad + w].copy()


class MaxPool2d:
    """Non-overlapping max pooling; window and stride must match.

    Odd trailing rows/columns are dropped. Ties go to the first cell of
    the window in row-major order, matching argmax on the unrolled
    window.
    """

    def __init__(self, window=2, stride=2):
        if window != stride:
            raise ValueError(
                f"only non-overlapping pooling is supported, got window "
                f"{window} with stride {stride}"
            )
        if window < 1:
            raise ValueError(f"window must be positive, got {window}")
        self.window = int(window)

    def forward(self, x, train=False):
        n, c, h, w = x.shape
        s = self.window
        oh, ow = h // s, w // s
        if oh == 0 or ow == 0:
            raise ValueError(f"input {h}x{w} is smaller than the pooling window {s}")
        if s == 2:
            # strict > keeps the earlier cell on ties, matching argmax over
            # the window unrolled in row-major order
            x6 = x[:, :, : oh * 2, : ow * 2].reshape(n, c, oh, 2, ow, 2)
            colmax = np.maximum(x6[..., 0], x6[..., 1])
            out = np.maximum(colmax[:, :, :, 0, :], colmax[:, :, :, 1, :])
            if train:
                self._fast = True
                self._in_shape = (n, c, h, w)
                j5 = x6[..., 1] > x6[..., 0]
                row1 = colmax[:, :, :, 1, :] > colmax[:, :, :, 0, :]
                col1 = j5[:, :, :, 0, :].copy()
                np.copyto(col1, j5[:, :, :, 1, :], where=row1)
                self._row1 = row1
                self._col1 = col1
            return out
        trimmed = x[:, :, : oh * s, : ow * s]
        windows = (
            trimmed.reshape(n, c, oh, s, ow, s)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, oh, ow, s * s)
        )
        if train:
            self._fast = False
            self._idx = windows.argmax(axis=-1)
            self._in_shape = (n, c, h, w)
            out = np.take_along_axis(windows, self._idx[..., None], axis=-1)[..., 0]
        else:
            out = windows.max(axis=-1)
        return out

    def backward(self, dout):
        n, c, h, w = self._in_shape
        s = self.window
        oh, ow = dout.shape[2], dout.shape[3]
        if self._fast:
            row1, col1 = self._row1, self._col1
            dx = np.zeros((n, c, h, w), dtype=dout.dtype)
            bottom = dout * row1
            top = dout - bottom
            dx[:, :, 0 : oh * 2 : 2, 0 : ow * 2 : 2] = top * ~col1
            dx[:, :, 0 : oh * 2 : 2, 1 : ow * 2 : 2] = top * col1
            dx[:, :, 1 : oh * 2 : 2, 0 : ow * 2 : 2] = bottom * ~col1
            dx[:, :, 1 : oh * 2 : 2, 1 : ow * 2 : 2] = bottom * col1
            return dx
        flat = np.zeros((n, c, oh, ow, s * s), dtype=dout.dtype)
        np.put_along_axis(flat, self._idx[..., None], dout[..., None], axis=-1)
        dx = np.zeros((n, c, h, w), dtype=dout.dtype)
        dx[:, :, : oh * s, : ow * s] = (
            flat.reshape(n, c, oh, ow, s, s)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, oh * s, ow * s)
        )
        return dx


class BatchNorm2d:
    """Per-channel batch normalization over (N, H, W).

    Training uses biased batch statistics and keeps exponential running
    statistics for inference. A training batch must contain at least two
    samples, otherwise the variance is meaningless.
    """

    def __init__(self, channels, momentum=0.9, eps=1e-5, dtype=np.float32):
        self.channels = int(channels)
        self.momentum = float(momentum)
        self.eps = float(eps)
        self.gamma = np.ones(channels, dtype=dtype)
        self.beta = np.zeros(channels, dtype=dtype)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.dgamma = np.zeros_like(self.gamma)
        self.dbeta = np.zeros_like(self.beta)

    def forward(self, x, train=False):
        if x.ndim != 4 or x.shape[1] != self.channels:
            raise ValueError(
                f"expected (N, {self.channels}, H, W) input, got shape {x.shape}"
            )
        if train:
            if x.shape[0] < 2:
                raise ValueError(
                    f"batch normalization needs at least 2 samples per training "
                    f"batch, got {x.shape[0]}"
                )
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            m = self.momentum
            self.running_mean *= m
            self.running_mean += (1.0 - m) * mean
            self.running_var *= m
            self.running_var += (1.0 - m) * var
            inv = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mean[None, :, None, None]) * inv[None, :, None, None]
            self._xhat = xhat
            self._inv = inv
            return self.gamma[None, :, None, None] * xhat + self.beta[None, :, None, None]
        inv = 1.0 / np.sqrt(self.running_var + self.eps)
        scale = (self.gamma * inv)[None, :, None, None]
        shift = (self.beta - self.gamma * self.running_mean * inv)[None, :, None, None]
        return scale * x + shift

    def backward(self, dout):
        xhat = self._xhat
        m = float(dout.shape[0] * dout.shape[2] * dout.shape[3])
        np.sum(dout * xhat, axis=(0, 2, 3), out=self.dgamma)
        np.sum(dout, axis=(0, 2, 3), out=self.dbeta)
        scale = (self.gamma * self._inv / m)[None, :, None, None]
        dx = scale * (
            m * dout
            - self.dbeta[None, :, None, None]
            - xhat * self.dgamma[None, :, None, None]
        )
        return dx


class Flatten:
    """Row-major reshape to (N, features)."""

    def forward(self, x, train=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)


class Dense:
    """Fully connected layer with optional fused ReLU."""

    def __init__(self, in_features, out_features, activation=None,
                 rng=None, dtype=np.float32):
        rng = rng if rng is not None else default_rng()
        self.in_features = int(in_features)
        self.out_features = int(out_features)
        self.activation = _check_activation(activation)
        self.w = he_uniform(rng, (in_features, out_features), in_features, dtype)
        self.b = np.zeros(out_features, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)

    def forward(self, x, train=False):
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValueError(
                f"expected (N, {self.in_features}) input, got shape {x.shape}"
            )
        out = x @ self.w
        out += self.b
        if self.activation == "relu":
            np.maximum(out, 0.0, out=out)
            if train:
                self._mask = out > 0
        if train:
            self._x = x
        return out

    def backward(self, dout):
        if self.activation == "relu":
            dout = dout * self._mask
        np.matmul(self._x.T, dout, out=self.dw)
        np.sum(dout, axis=0, out=self.db)
        return dout @ self.w.T


def softmax(logits) -> np.ndarray:
    """Row-wise softmax, stabilized by subtracting the row maximum."""
    logits = np.asarray(logits)
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy over the batch and its gradient on the logits.

    Returns (loss, grad) where grad already includes the 1/N factor, so
    feeding it straight into backward() trains on the mean loss.
    """
    logits = np.asarray(logits)
    if logits.ndim != 2:
        raise ValueError(f"logits must be (N, classes), got shape {logits.shape}")
    n, n_classes = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValueError(
            f"labels must have shape ({n},) to match the logits, got {labels.shape}"
        )
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError(f"labels must be integers, got dtype {labels.dtype}")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1, keepdims=True))
    rows = np.arange(n)
    loss = float(np.mean(logsum[:, 0] - z[rows, labels]))
    grad = np.exp(z - logsum)
    grad[rows, labels] -= 1.0
    grad /= n
    # probabilities of heavily losing classes underflow toward the
    # subnormal range; they carry no usable signal but make every
    # downstream multiply take a microcode assist, so flush them
    grad[np.abs(grad) < 1e-35] = 0.0
    return loss, grad
