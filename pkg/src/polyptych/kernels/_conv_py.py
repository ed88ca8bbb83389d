"""Numpy fallback for the convolution kernels.

Uses an im2col view plus BLAS matmul. Accumulation happens inside a single
matmul per call, so results are deterministic for a fixed build of numpy.
"""

import numpy as np

BACKEND = "python"


def _pad(x, pad):
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def _im2col(xp, kh, kw, stride, oh, ow):
    b, c, _, _ = xp.shape
    s0, s1, s2, s3 = xp.strides
    shape = (b, c, kh, kw, oh, ow)
    strides = (s0, s1, s2, s3, s2 * stride, s3 * stride)
    view = np.lib.stride_tricks.as_strided(xp, shape=shape, strides=strides)
    return view.reshape(b, c * kh * kw, oh * ow)


def conv2d_forward(x, w, stride, pad):
    b, c, h, wd = x.shape
    f, _, kh, kw = w.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    cols = _im2col(_pad(x, pad), kh, kw, stride, oh, ow)
    y = np.matmul(w.reshape(f, -1), cols)
    return np.ascontiguousarray(y.reshape(b, f, oh, ow))


def conv2d_backward_input(gy, w, stride, pad, h, wd):
    b, f, oh, ow = gy.shape
    _, c, kh, kw = w.shape
    dcols = np.matmul(w.reshape(f, -1).T, gy.reshape(b, f, oh * ow))
    dcols = dcols.reshape(b, c, kh, kw, oh, ow)
    gxp = np.zeros((b, c, h + 2 * pad, wd + 2 * pad), dtype=gy.dtype)
    for ky in range(kh):
        for kx in range(kw):
            gxp[:, :, ky : ky + stride * oh : stride, kx : kx + stride * ow : stride] += dcols[
                :, :, ky, kx, :, :
            ]
    if pad:
        gxp = gxp[:, :, pad : pad + h, pad : pad + wd]
    return np.ascontiguousarray(gxp)


def conv2d_backward_weight(gy, x, kh, kw, stride, pad):
    b, f, oh, ow = gy.shape
    c = x.shape[1]
    cols = _im2col(_pad(x, pad), kh, kw, stride, oh, ow)
    gw = np.matmul(gy.reshape(b, f, oh * ow), cols.transpose(0, 2, 1)).sum(axis=0)
    return np.ascontiguousarray(gw.reshape(f, c, kh, kw))
