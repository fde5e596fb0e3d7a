"""Adam optimizer operating in place on a named parameter dict."""

from __future__ import annotations

import numpy as np


class Adam:
    """Bias-corrected Adam.

    update = lr * m_hat / (sqrt(v_hat) + epsilon)

    Moment buffers start at zero, so a parameter whose gradient stays
    exactly zero is never moved. All updates happen in place on the
    arrays handed in at construction.
    """

    def __init__(self, params: dict, learning_rate=1e-3,
                 beta1=0.9, beta2=0.999, epsilon=1e-8):
        if not params:
            raise ValueError("no parameters to optimize")
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ValueError(f"betas must lie in [0, 1), got {beta1}, {beta2}")
        if learning_rate <= 0.0:
            raise ValueError(f"learning rate must be positive, got {learning_rate}")
        if epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        self.params = dict(params)
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.t = 0
        self._m = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._v = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._scratch = {k: np.empty_like(v) for k, v in self.params.items()}

    def step(self, grads: dict) -> None:
        if set(grads) != set(self.params):
            missing = set(self.params) - set(grads)
            extra = set(grads) - set(self.params)
            raise ValueError(
                f"gradient keys do not match parameters "
                f"(missing {sorted(missing)}, unexpected {sorted(extra)})"
            )
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        sqrt_c2 = np.sqrt(c2)
        if self.t % 64 == 0:
            # moments of parameters with long-quiet gradients decay into
            # the subnormal range, where every later update pays a
            # microcode assist; zeroing them changes updates by < 1e-27
            for buf in (*self._m.values(), *self._v.values()):
                buf[np.abs(buf) < 1e-35] = 0.0
        for key, param in self.params.items():
            grad = grads[key]
            if grad.shape != param.shape:
                raise ValueError(
                    f"gradient for '{key}' has shape {grad.shape}, "
                    f"parameter has {param.shape}"
                )
            m = self._m[key]
            v = self._v[key]
            tmp = self._scratch[key]
            m *= self.beta1
            np.multiply(grad, 1.0 - self.beta1, out=tmp)
            m += tmp
            v *= self.beta2
            np.square(grad, out=tmp)
            tmp *= 1.0 - self.beta2
            v += tmp
            # sqrt(v_hat) + eps, then lr * m_hat / that
            np.sqrt(v, out=tmp)
            tmp /= sqrt_c2
            tmp += self.epsilon
            np.divide(m, tmp, out=tmp)
            tmp *= self.learning_rate / c1
            param -= tmp
