from __future__ import annotations

import math

from typing import Mapping

import numpy as np

from crosslab.exceptions import InvalidInputError, NonFiniteGradient


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_by_global_norm(grads: Mapping[str, np.ndarray], max_norm: float) -> tuple[dict[str, np.ndarray], float]:
    norm = global_norm(grads)
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        return {name: g * scale for name, g in grads.items()}, norm
    return dict(grads), norm


class Adam:
    '''
    Adaptive-moment optimizer over a flat dict of parameter arrays

    Arrays are updated in place, so every holder of a reference (a
    :py:class:`~crosslab.net.layers.Network`) sees the new values.
    '''

    def __init__(self, params: Mapping[str, np.ndarray], lr: float = 1e-3, betas=(0.9, 0.999),
                 eps: float = 1e-8, max_grad_norm: float = 1.0):
        self.params = dict(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.max_grad_norm = max_grad_norm
        self.m = {name: np.zeros_like(p) for name, p in self.params.items()}
        self.v = {name: np.zeros_like(p) for name, p in self.params.items()}
        self.t = 0

    def step(self, grads: Mapping[str, np.ndarray], lr: float | None = None) -> float:
        '''
        Clip gradients to the global norm limit, then apply one update

        :return: the gradient norm before clipping.

        :raises: NonFiniteGradient without touching any parameter when a
            gradient holds NaN or infinity.
        '''
        for name, g in grads.items():
            if name not in self.params:
                raise InvalidInputError(f"gradient for unknown parameter {name}")
            if g.shape != self.params[name].shape:
                raise InvalidInputError(f"gradient for {name} has shape {g.shape}, expected {self.params[name].shape}")
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradient(f"non-finite gradient for {name}")
        grads, norm = clip_by_global_norm(grads, self.max_grad_norm)
        lr = self.lr if lr is None else lr
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            self.params[name] -= lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
        return norm


def optimizer_step(optimizer: Adam, gradients: Mapping[str, np.ndarray], lr: float | None = None) -> float:
    return optimizer.step(gradients, lr)
