"""Adam optimizer with global gradient-norm clipping."""

from __future__ import annotations

import numpy as np

from ..errors import NonFiniteGradient
from .tensor import Tensor


class Parameter:
    """A trainable tensor together with its Adam state."""

    def __init__(self, data: np.ndarray, name: str = ""):
        self.tensor = Tensor(np.ascontiguousarray(data), requires_grad=True)
        self.name = name
        self.m = np.zeros_like(self.tensor.data)
        self.v = np.zeros_like(self.tensor.data)
        self.t = 0

    @property
    def data(self) -> np.ndarray:
        return self.tensor.data

    @property
    def grad(self):
        return self.tensor.grad

    def reset_state(self) -> None:
        self.m[:] = 0
        self.v[:] = 0
        self.t = 0


def zero_grad(params: list[Parameter]) -> None:
    """Reset every gradient buffer to exact zeros."""
    for p in params:
        if p.tensor.grad is None:
            p.tensor.grad = np.zeros_like(p.tensor.data)
        else:
            p.tensor.grad[...] = 0


def global_grad_norm(params: list[Parameter]) -> float:
    total = 0.0
    for p in params:
        if p.tensor.grad is not None:
            g = p.tensor.grad
            total += float(np.sum(g.astype(np.float64) ** 2))
    return float(np.sqrt(total))


def adam_step(
    params: list[Parameter],
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    clip_norm: float | None = 1.0,
) -> float:
    """One bias-corrected Adam update over all parameters.

    The global gradient norm is clipped to ``clip_norm`` before the update.
    Returns the pre-clip gradient norm.  Raises
    :class:`NonFiniteGradient` when any gradient contains NaN or Inf.
    """
    for p in params:
        g = p.tensor.grad
        if g is not None and not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient in {p.name or 'parameter'}")
    norm = global_grad_norm(params)
    clip_scale = 1.0
    if clip_norm is not None and norm > clip_norm > 0:
        clip_scale = clip_norm / norm
    for p in params:
        g = p.tensor.grad
        if g is None:
            g = np.zeros_like(p.tensor.data)
        if clip_scale != 1.0:
            g = g * p.tensor.data.dtype.type(clip_scale)
        p.t += 1
        p.m += (1 - beta1) * (g - p.m)
        p.v += (1 - beta2) * (g * g - p.v)
        m_hat = p.m / (1 - beta1**p.t)
        v_hat = p.v / (1 - beta2**p.t)
        p.tensor.data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.tensor.data.dtype)
    return norm
