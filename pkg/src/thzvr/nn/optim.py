"""Plain SGD and Adam over a ParameterTree."""

from __future__ import annotations

import numpy as np

from .params import ParameterTree


class SgdOptimizer:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, tree: ParameterTree) -> None:
        for name, value, grad in tree.items():
            tree.set_value(name, value - self.lr * grad)


class AdamOptimizer:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, tree: ParameterTree) -> None:
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for name, value, grad in tree.items():
            m = self._m.setdefault(name, np.zeros_like(value))
            v = self._v.setdefault(name, np.zeros_like(value))
            m += (1.0 - self.beta1) * (grad - m)
            v += (1.0 - self.beta2) * (grad * grad - v)
            update = (m / b1t) / (np.sqrt(v / b2t) + self.eps)
            if self.weight_decay > 0.0:
                update = update + self.weight_decay * value
            tree.set_value(name, value - self.lr * update)
