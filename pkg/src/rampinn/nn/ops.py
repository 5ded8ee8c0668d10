"""Differentiable operations for the spectral reconstruction network.

All array compute is float32 by default; reductions that feed statistics or
losses accumulate in float64 before casting back.  Each op validates shapes
up front and raises :class:`ShapeMismatch` on disagreement.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse
from scipy.special import expit

from ..errors import ShapeMismatch
from ..hilbert import hilbert_imag
from .tensor import Tensor, result

# ---------------------------------------------------------------------------
# arithmetic and reductions


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    out = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g)
        if b.requires_grad:
            b.accumulate_grad(g)

    return result(out, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "sub")
    out = a.data - b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g)
        if b.requires_grad:
            b.accumulate_grad(-g)

    return result(out, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "mul")
    out = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g * b.data)
        if b.requires_grad:
            b.accumulate_grad(g * a.data)

    return result(out, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    out = a.data * a.data.dtype.type(c)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g * a.data.dtype.type(c))

    return result(out, (a,), backward)


def mean_all(a: Tensor) -> Tensor:
    """Mean over every element, accumulated in float64."""
    n = a.data.size
    out = np.asarray(np.mean(a.data, dtype=np.float64), dtype=a.data.dtype)

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(np.full_like(a.data, g / n))

    return result(out, (a,), backward)


def forward_diff(a: Tensor) -> Tensor:
    """First differences along the last axis."""
    if a.data.shape[-1] < 2:
        raise ShapeMismatch("forward_diff needs length >= 2 on the last axis")
    out = a.data[..., 1:] - a.data[..., :-1]

    def backward(g):
        if a.requires_grad:
            d = np.zeros_like(a.data)
            d[..., 1:] += g
            d[..., :-1] -= g
            a.accumulate_grad(d)

    return result(out, (a,), backward)


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean squared difference (scalar)."""
    diff = sub(a, b)
    return mean_all(mul(diff, diff))


# ---------------------------------------------------------------------------
# activations


def relu(x: Tensor) -> Tensor:
    out = np.maximum(x.data, 0)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * (x.data > 0))

    return result(out, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    out = expit(x.data)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(g * out * (1 - out))

    return result(out, (x,), backward)


# ---------------------------------------------------------------------------
# convolution


def conv1d(x: Tensor, weight: Tensor, bias: Tensor, padding: int = 2, stride: int = 1) -> Tensor:
    """1-D convolution over (batch, channels, length) with zero padding.

    With the default odd kernel and ``padding = (K-1)//2`` the output length
    equals the input length.
    """
    xd, wd, bd = x.data, weight.data, bias.data
    if xd.ndim != 3 or wd.ndim != 3:
        raise ShapeMismatch("conv1d expects x (B,C,L) and weight (Co,Ci,K)")
    batch, c_in, length = xd.shape
    c_out, c_in_w, k = wd.shape
    if c_in != c_in_w:
        raise ShapeMismatch(f"conv1d: input channels {c_in} != weight channels {c_in_w}")
    if k % 2 == 0:
        raise ShapeMismatch("conv1d kernel size must be odd")
    if bd.shape != (c_out,):
        raise ShapeMismatch("conv1d bias must have one value per output channel")
    padded = np.pad(xd, ((0, 0), (0, 0), (padding, padding)))
    l_pad = length + 2 * padding
    l_out = (l_pad - k) // stride + 1
    s0, s1, s2 = padded.strides
    windows = np.lib.stride_tricks.as_strided(
        padded, (batch, c_in, k, l_out), (s0, s1, s2, s2 * stride)
    )
    cols = np.ascontiguousarray(windows.transpose(1, 2, 0, 3)).reshape(c_in * k, batch * l_out)
    out = (wd.reshape(c_out, c_in * k) @ cols).reshape(c_out, batch, l_out).transpose(1, 0, 2)
    out = out + bd[None, :, None]

    def backward(g):
        g_mat = np.ascontiguousarray(g.transpose(1, 0, 2)).reshape(c_out, batch * l_out)
        if weight.requires_grad:
            weight.accumulate_grad((g_mat @ cols.T).reshape(c_out, c_in, k))
        if bias.requires_grad:
            bias.accumulate_grad(
                np.sum(g, axis=(0, 2), dtype=np.float64).astype(bd.dtype)
            )
        if x.requires_grad:
            spread = (wd.reshape(c_out, c_in * k).T @ g_mat).reshape(c_in, k, batch, l_out)
            d_pad = np.zeros_like(padded)
            for kk in range(k):
                d_pad[:, :, kk : kk + l_out * stride : stride] += spread[:, kk].transpose(1, 0, 2)
            x.accumulate_grad(d_pad[:, :, padding : padding + length])

    return result(np.ascontiguousarray(out), (x, weight, bias), backward)


# ---------------------------------------------------------------------------
# batch normalisation


class BatchNormState:
    """Running statistics buffers for one batch-norm layer."""

    def __init__(self, channels: int, dtype=np.float32):
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)

    def arrays(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}


def batchnorm1d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    state: BatchNormState,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Per-channel normalisation over (batch, length) with running statistics."""
    xd = x.data
    if xd.ndim != 3:
        raise ShapeMismatch("batchnorm1d expects (B,C,L)")
    channels = xd.shape[1]
    if gamma.data.shape != (channels,) or beta.data.shape != (channels,):
        raise ShapeMismatch("batchnorm1d gamma/beta must match the channel count")
    dtype = xd.dtype
    if training:
        n = xd.shape[0] * xd.shape[2]
        mean = np.mean(xd, axis=(0, 2), dtype=np.float64)
        var = np.mean((xd - mean[None, :, None].astype(dtype)) ** 2, axis=(0, 2), dtype=np.float64)
        unbiased = var * n / max(n - 1, 1)
        state.running_mean[:] = ((1 - momentum) * state.running_mean + momentum * mean).astype(dtype)
        state.running_var[:] = ((1 - momentum) * state.running_var + momentum * unbiased).astype(dtype)
        mean = mean.astype(dtype)
        inv_std = (1.0 / np.sqrt(var + eps)).astype(dtype)
    else:
        mean = state.running_mean
        inv_std = (1.0 / np.sqrt(state.running_var.astype(np.float64) + eps)).astype(dtype)
    x_hat = (xd - mean[None, :, None]) * inv_std[None, :, None]
    out = gamma.data[None, :, None] * x_hat + beta.data[None, :, None]

    def backward(g):
        if gamma.requires_grad:
            gamma.accumulate_grad(
                np.sum(g * x_hat, axis=(0, 2), dtype=np.float64).astype(dtype)
            )
        if beta.requires_grad:
            beta.accumulate_grad(np.sum(g, axis=(0, 2), dtype=np.float64).astype(dtype))
        if x.requires_grad:
            gi = g * gamma.data[None, :, None]
            if training:
                m = np.mean(gi, axis=(0, 2), dtype=np.float64).astype(dtype)
                mx = np.mean(gi * x_hat, axis=(0, 2), dtype=np.float64).astype(dtype)
                dx = inv_std[None, :, None] * (gi - m[None, :, None] - x_hat * mx[None, :, None])
            else:
                dx = gi * inv_std[None, :, None]
            x.accumulate_grad(dx)

    return result(out, (x, gamma, beta), backward)


# ---------------------------------------------------------------------------
# pooling and resampling


def avg_pool1d(x: Tensor, k: int = 2) -> Tensor:
    """Non-overlapping window averaging; a trailing remainder is dropped."""
    xd = x.data
    if xd.ndim != 3:
        raise ShapeMismatch("avg_pool1d expects (B,C,L)")
    if xd.shape[-1] < k:
        raise ShapeMismatch(f"avg_pool1d: length {xd.shape[-1]} shorter than window {k}")
    l_out = xd.shape[-1] // k
    out = xd[:, :, : l_out * k].reshape(xd.shape[0], xd.shape[1], l_out, k).mean(axis=-1)

    def backward(g):
        if x.requires_grad:
            d = np.zeros_like(xd)
            d[:, :, : l_out * k] = np.repeat(g / k, k, axis=-1)
            x.accumulate_grad(d)

    return result(out.astype(xd.dtype, copy=False), (x,), backward)


@lru_cache(maxsize=64)
def _resample_plan(l_in: int, l_out: int):
    # half-sample-centre convention (align_corners=False), clamped at the edges
    src = (np.arange(l_out, dtype=np.float64) + 0.5) * (l_in / l_out) - 0.5
    src = np.clip(src, 0.0, l_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, l_in - 1)
    frac = src - lo
    # scatter matrix for the backward pass: dst = g @ scatter, (l_out x l_in)
    rows = np.concatenate([np.arange(l_out), np.arange(l_out)])
    cols = np.concatenate([lo, hi])
    weights = np.concatenate([1.0 - frac, frac])
    scatter = scipy.sparse.csr_matrix(
        (weights.astype(np.float32), (rows, cols)), shape=(l_out, l_in)
    )
    return lo, hi, frac, scatter


def interpolate_linear(x: Tensor, target_len: int) -> Tensor:
    """Linear resampling of the last axis to ``target_len`` samples."""
    xd = x.data
    if xd.ndim != 3:
        raise ShapeMismatch("interpolate_linear expects (B,C,L)")
    if target_len < 1:
        raise ShapeMismatch("target length must be positive")
    l_in = xd.shape[-1]
    if target_len == l_in:
        out = xd

        def backward_id(g):
            if x.requires_grad:
                x.accumulate_grad(g)

        return result(out, (x,), backward_id)
    lo, hi, frac, scatter = _resample_plan(l_in, target_len)
    w_hi = frac.astype(xd.dtype)
    w_lo = (1.0 - frac).astype(xd.dtype)
    out = xd[:, :, lo] * w_lo + xd[:, :, hi] * w_hi

    def backward(g):
        if x.requires_grad:
            mat = scatter if xd.dtype == np.float32 else scatter.astype(np.float64)
            d = (g.reshape(-1, target_len) @ mat).reshape(xd.shape)
            x.accumulate_grad(np.asarray(d, dtype=xd.dtype))

    return result(out, (x,), backward)


def upsample_linear(x: Tensor, scale: int = 2) -> Tensor:
    """Linear upsampling by an integer factor."""
    return interpolate_linear(x, x.data.shape[-1] * scale)


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate two (B,C,L) tensors along the channel axis."""
    ad, bd = a.data, b.data
    if ad.ndim != 3 or bd.ndim != 3:
        raise ShapeMismatch("concat_channels expects (B,C,L) tensors")
    if ad.shape[0] != bd.shape[0] or ad.shape[2] != bd.shape[2]:
        raise ShapeMismatch(f"concat_channels: incompatible shapes {ad.shape} and {bd.shape}")
    out = np.concatenate([ad, bd], axis=1)
    split = ad.shape[1]

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g[:, :split])
        if b.requires_grad:
            b.accumulate_grad(g[:, split:])

    return result(out, (a, b), backward)


# ---------------------------------------------------------------------------
# attention


def self_attention_1d(
    x: Tensor,
    wq: Tensor, bq: Tensor,
    wk: Tensor, bk: Tensor,
    wv: Tensor, bv: Tensor,
) -> Tensor:
    """Single-head scaled dot-product attention along the length axis.

    Queries, keys and values are channel-to-channel projections of the
    input; the attention output is added back to the input (residual).
    """
    xd = x.data
    if xd.ndim != 3:
        raise ShapeMismatch("self_attention_1d expects (B,C,L)")
    batch, channels, length = xd.shape
    for w, b in ((wq, bq), (wk, bk), (wv, bv)):
        if w.data.shape != (channels, channels) or b.data.shape != (channels,):
            raise ShapeMismatch("attention projections must be square channel maps")
    dtype = xd.dtype
    x_mat = np.ascontiguousarray(xd.transpose(1, 0, 2)).reshape(channels, batch * length)

    def project(w, b):
        m = w.data @ x_mat + b.data[:, None]
        return m.reshape(channels, batch, length).transpose(1, 0, 2)

    q = project(wq, bq)
    k = project(wk, bk)
    v = project(wv, bv)
    inv_sqrt_c = dtype.type(1.0 / np.sqrt(channels))
    scores = np.matmul(q.transpose(0, 2, 1), k) * inv_sqrt_c
    scores -= scores.max(axis=-1, keepdims=True)
    attn = np.exp(scores)
    attn /= attn.sum(axis=-1, keepdims=True)
    context = np.matmul(v, attn.transpose(0, 2, 1))
    out = xd + context

    def backward(g):
        d_attn = np.matmul(g.transpose(0, 2, 1), v)
        dv = np.matmul(g, attn)
        ds = attn * (d_attn - np.sum(d_attn * attn, axis=-1, keepdims=True))
        dq = np.matmul(k, ds.transpose(0, 2, 1)) * inv_sqrt_c
        dk = np.matmul(q, ds) * inv_sqrt_c
        dx_total = g.copy()  # residual path

        def unproject(dp, w, wt, bt):
            dp_mat = np.ascontiguousarray(dp.transpose(1, 0, 2)).reshape(
                channels, batch * length
            )
            if wt.requires_grad:
                wt.accumulate_grad(dp_mat @ x_mat.T)
            if bt.requires_grad:
                bt.accumulate_grad(np.sum(dp_mat, axis=1, dtype=np.float64).astype(dtype))
            return (w.T @ dp_mat).reshape(channels, batch, length).transpose(1, 0, 2)

        dx_total += unproject(dq, wq.data, wq, bq)
        dx_total += unproject(dk, wk.data, wk, bk)
        dx_total += unproject(dv, wv.data, wv, bv)
        if x.requires_grad:
            x.accumulate_grad(dx_total)

    return result(out, (x, wq, bq, wk, bk, wv, bv), backward)


# ---------------------------------------------------------------------------
# the differentiable Hilbert transform


def hilbert_im(x: Tensor) -> Tensor:
    """Discrete Hilbert transform along the last axis, differentiable.

    The operator is linear with an antisymmetric matrix, so the backward
    pass applies its transpose: the negated transform of the gradient.
    """
    xd = x.data
    if xd.shape[-1] < 2:
        raise ShapeMismatch("hilbert_im needs length >= 2 on the last axis")
    out = hilbert_imag(xd).astype(xd.dtype)

    def backward(g):
        if x.requires_grad:
            x.accumulate_grad(-hilbert_imag(g).astype(xd.dtype))

    return result(out, (x,), backward)
