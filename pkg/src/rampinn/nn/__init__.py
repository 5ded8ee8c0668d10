"""Minimal reverse-mode autodiff engine: tensors, ops, Adam, checkpoints."""

from .checkpoint import load_arrays, save_arrays
from .optim import Parameter, adam_step, global_grad_norm, zero_grad
from .ops import (
    add,
    avg_pool1d,
    batchnorm1d,
    BatchNormState,
    concat_channels,
    conv1d,
    forward_diff,
    hilbert_im,
    interpolate_linear,
    mean_all,
    mse,
    mul,
    relu,
    scale,
    self_attention_1d,
    sigmoid,
    sub,
    upsample_linear,
)
from .tensor import Tensor, as_tensor, grad_enabled, no_grad

__all__ = [
    "Tensor", "as_tensor", "no_grad", "grad_enabled",
    "Parameter", "adam_step", "zero_grad", "global_grad_norm",
    "save_arrays", "load_arrays",
    "add", "sub", "mul", "scale", "mean_all", "mse", "forward_diff",
    "relu", "sigmoid", "conv1d", "batchnorm1d", "BatchNormState",
    "avg_pool1d", "upsample_linear", "interpolate_linear",
    "concat_channels", "self_attention_1d", "hilbert_im",
]
