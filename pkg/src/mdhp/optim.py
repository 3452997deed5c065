"""First-order optimizers over dictionaries of numpy arrays.

Both optimizers *minimize*; pass the negated gradient to ascend.
"""

from __future__ import annotations

import copy

import numpy as np


class GradientDescent:
    def __init__(self, lr: float):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.lr = lr

    def step(self, params: dict, grads: dict) -> dict:
        return {k: params[k] - self.lr * grads[k] for k in params}

    def state_dict(self) -> dict:
        return {}

    def load_state_dict(self, state: dict) -> None:
        pass


class AdamW:
    """Adam with decoupled weight decay.

    Matches the usual formulation: the decay shrinks parameters by
    ``lr * weight_decay`` before the bias-corrected moment step.
    """

    def __init__(self, lr: float = 1e-3, betas=(0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m: dict = {}
        self.v: dict = {}

    def step(self, params: dict, grads: dict) -> dict:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        out = {}
        for k, p in params.items():
            g = grads[k]
            m = self.m.get(k)
            if m is None:
                m = np.zeros_like(p)
                self.v[k] = np.zeros_like(p)
            m = b1 * m + (1.0 - b1) * g
            v = b2 * self.v[k] + (1.0 - b2) * g * g
            self.m[k], self.v[k] = m, v
            if self.weight_decay:
                p = p * (1.0 - self.lr * self.weight_decay)
            out[k] = p - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return out

    def state_dict(self) -> dict:
        return {"t": self.t, "m": copy.deepcopy(self.m), "v": copy.deepcopy(self.v)}

    def load_state_dict(self, state: dict) -> None:
        self.t = state["t"]
        self.m = copy.deepcopy(state["m"])
        self.v = copy.deepcopy(state["v"])
