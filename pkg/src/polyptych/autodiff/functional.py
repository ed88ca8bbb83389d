"""Differentiable operations beyond Tensor's own arithmetic.

Convolution follows the cross-correlation convention (no kernel flip)
everywhere in this package. GeLU uses the tanh approximation

    gelu(x) = 0.5 * x * (1 + tanh(sqrt(2/pi) * (x + 0.044715 * x^3)))

with the constants spelled out below. Bilinear resize samples with the
align-corners-false convention.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import DimensionError
from .tensor import Tensor, as_tensor

GELU_SCALE = 0.7978845608028654  # sqrt(2/pi)
GELU_CUBIC = 0.044715


def conv2d(x, weight, bias=None, stride: int = 1, pad: int = 0) -> Tensor:
    """2-D cross-correlation of [B,C,H,W] with [F,C,kh,kw] filters."""
    x, weight = as_tensor(x), as_tensor(weight)
    if bias is not None:
        bias = as_tensor(bias)
    if x.ndim != 4 or weight.ndim != 4:
        raise DimensionError("conv2d expects 4-D input and weight")
    if x.dtype != weight.dtype:
        raise TypeError(f"conv2d dtype mismatch: input {x.dtype} vs weight {weight.dtype}")
    b, c, h, w = x.shape
    f, cw, kh, kw = weight.shape
    if cw != c:
        raise DimensionError(f"conv2d channel mismatch: input has {c}, weight expects {cw}")
    if stride < 1:
        raise DimensionError("conv2d stride must be >= 1")
    if kh > h + 2 * pad or kw > w + 2 * pad:
        raise DimensionError("conv2d kernel larger than padded input")
    y = kernels.conv2d_forward(x.data, weight.data, stride, pad)
    out = Tensor(y, _parents=(x, weight))

    def bw(g):
        if x.requires_grad:
            x.accumulate_grad(kernels.conv2d_backward_input(g, weight.data, stride, pad, h, w))
        if weight.requires_grad:
            weight.accumulate_grad(kernels.conv2d_backward_weight(g, x.data, kh, kw, stride, pad))

    out._backward_fn = bw
    if bias is not None:
        if bias.shape != (f,):
            raise DimensionError(f"conv2d bias must have shape ({f},), got {bias.shape}")
        out = out + bias.reshape(1, f, 1, 1)
    return out


def softmax(x: Tensor, axis: int) -> Tensor:
    """Numerically stabilized softmax along ``axis``."""
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"softmax axis {axis} invalid for shape {x.shape}")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y, _parents=(x,))

    def bw(g):
        if x.requires_grad:
            dot = (g * y).sum(axis=axis, keepdims=True)
            x.accumulate_grad(y * (g - dot))

    out._backward_fn = bw
    return out


def gelu(x: Tensor) -> Tensor:
    u = GELU_SCALE * (x.data + GELU_CUBIC * x.data**3)
    t = np.tanh(u)
    y = 0.5 * x.data * (1.0 + t)
    out = Tensor(y, _parents=(x,))

    def bw(g):
        if x.requires_grad:
            du = GELU_SCALE * (1.0 + 3.0 * GELU_CUBIC * x.data**2)
            grad = 0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t * t) * du
            x.accumulate_grad(g * grad)

    out._backward_fn = bw
    return out


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    y = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))), np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))
    y = y.astype(d.dtype, copy=False)
    out = Tensor(y, _parents=(x,))

    def bw(g):
        if x.requires_grad:
            x.accumulate_grad(g * y * (1.0 - y))

    out._backward_fn = bw
    return out


def global_avg_pool(x: Tensor) -> Tensor:
    """[B,C,H,W] -> [B,C,1,1], arithmetic mean over each plane."""
    if x.ndim != 4:
        raise DimensionError("global_avg_pool expects a 4-D tensor")
    return x.mean(axis=(2, 3), keepdims=True)


def pad2d(x: Tensor, pad: int) -> Tensor:
    """Zero-pad the two trailing spatial axes symmetrically."""
    if x.ndim != 4:
        raise DimensionError("pad2d expects a 4-D tensor")
    y = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    out = Tensor(y, _parents=(x,))

    def bw(g):
        if x.requires_grad:
            x.accumulate_grad(g[:, :, pad : g.shape[2] - pad, pad : g.shape[3] - pad])

    out._backward_fn = bw
    return out


def concat(tensors: list, axis: int) -> Tensor:
    y = np.concatenate([t.data for t in tensors], axis=axis)
    out = Tensor(y, _parents=tuple(tensors))

    def bw(g):
        start = 0
        for t in tensors:
            size = t.data.shape[axis]
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(start, start + size)
            if t.requires_grad:
                t.accumulate_grad(g[tuple(sl)])
            start += size

    out._backward_fn = bw
    return out


def upsample_nearest(x: Tensor, factor: int = 2) -> Tensor:
    """Integer-factor nearest-neighbor upsampling of [B,C,H,W]."""
    if x.ndim != 4:
        raise DimensionError("upsample_nearest expects a 4-D tensor")
    y = x.data.repeat(factor, axis=2).repeat(factor, axis=3)
    out = Tensor(y, _parents=(x,))

    def bw(g):
        if x.requires_grad:
            b, c, h, w = x.shape
            x.accumulate_grad(g.reshape(b, c, h, factor, w, factor).sum(axis=(3, 5)))

    out._backward_fn = bw
    return out


def _nearest_index(out_size: int, in_size: int) -> np.ndarray:
    # floor(i * in / out) in exact integer arithmetic
    return np.minimum(np.arange(out_size) * in_size // out_size, in_size - 1)


def _bilinear_axis(out_size: int, in_size: int):
    scale = in_size / out_size
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    i0f = np.floor(src)
    frac = src - i0f
    i0 = np.clip(i0f, 0, in_size - 1).astype(np.int64)
    i1 = np.clip(i0f + 1, 0, in_size - 1).astype(np.int64)
    return i0, i1, frac


def resize(x: Tensor, out_h: int, out_w: int, mode: str = "bilinear") -> Tensor:
    """Spatial resize of [B,C,H,W]; ``mode`` is ``nearest`` or ``bilinear``."""
    if x.ndim != 4:
        raise DimensionError("resize expects a 4-D tensor")
    if out_h < 1 or out_w < 1:
        raise DimensionError("resize target must be at least 1x1")
    b, c, h, w = x.shape
    if mode == "nearest":
        iy = _nearest_index(out_h, h)
        ix = _nearest_index(out_w, w)
        y = x.data[:, :, iy[:, None], ix[None, :]]
        out = Tensor(y, _parents=(x,))

        def bw(g):
            if x.requires_grad:
                gx = np.zeros_like(x.data)
                np.add.at(gx, (slice(None), slice(None), iy[:, None], ix[None, :]), g)
                x.accumulate_grad(gx)

        out._backward_fn = bw
        return out

    if mode != "bilinear":
        raise ValueError(f"unknown resize mode: {mode!r}")

    y0, y1, fy = _bilinear_axis(out_h, h)
    x0, x1, fx = _bilinear_axis(out_w, w)
    fy = fy.astype(x.data.dtype)
    fx = fx.astype(x.data.dtype)
    wy0 = (1.0 - fy)[:, None]
    wy1 = fy[:, None]
    wx0 = (1.0 - fx)[None, :]
    wx1 = fx[None, :]

    def gather(data):
        r0 = data[:, :, y0, :]
        r1 = data[:, :, y1, :]
        rows = r0 * wy0[None, None] + r1 * wy1[None, None]
        c0 = rows[:, :, :, x0]
        c1 = rows[:, :, :, x1]
        return c0 * wx0[None, None] + c1 * wx1[None, None]

    out = Tensor(gather(x.data).astype(x.data.dtype, copy=False), _parents=(x,))

    def bw(g):
        if not x.requires_grad:
            return
        gc = np.zeros((b, c, out_h, w), dtype=g.dtype)
        np.add.at(gc, (slice(None), slice(None), slice(None), x0), g * wx0[None, None])
        np.add.at(gc, (slice(None), slice(None), slice(None), x1), g * wx1[None, None])
        gx = np.zeros_like(x.data)
        np.add.at(gx, (slice(None), slice(None), y0, slice(None)), gc * wy0[None, None])
        np.add.at(gx, (slice(None), slice(None), y1, slice(None)), gc * wy1[None, None])
        x.accumulate_grad(gx)

    out._backward_fn = bw
    return out


def bce_with_logits(logits: Tensor, target: float) -> Tensor:
    """Elementwise binary cross-entropy against a constant 0/1 target.

    Computed as max(x,0) - x*t + log1p(exp(-|x|)), which is stable for
    logits of either sign.
    """
    d = logits.data
    y = np.maximum(d, 0) - d * target + np.log1p(np.exp(-np.abs(d)))
    out = Tensor(y, _parents=(logits,))

    def bw(g):
        if logits.requires_grad:
            s = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))), np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))
            logits.accumulate_grad(g * (s - target).astype(d.dtype, copy=False))

    out._backward_fn = bw
    return out
