# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution kernels (forward, input grad, weight grad).

Direct-loop implementation over typed memoryviews with a fixed row-major
accumulation order, so outputs are reproducible bit for bit across runs.
"""

import numpy as np

cimport cython

BACKEND = "cython"

ctypedef fused floating:
    float
    double


def conv2d_forward(x, w, int stride, int pad):
    x = np.ascontiguousarray(x)
    w = np.ascontiguousarray(w)
    b, c, h, wd = x.shape
    f, _, kh, kw = w.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    y = np.zeros((b, f, oh, ow), dtype=x.dtype)
    if x.dtype == np.float32:
        _forward[float](x, w, y, stride, pad)
    else:
        _forward[double](x, w, y, stride, pad)
    return y


def conv2d_backward_input(gy, w, int stride, int pad, int h, int wd):
    gy = np.ascontiguousarray(gy)
    w = np.ascontiguousarray(w)
    b = gy.shape[0]
    c = w.shape[1]
    gx = np.zeros((b, c, h, wd), dtype=gy.dtype)
    if gy.dtype == np.float32:
        _backward_input[float](gy, w, gx, stride, pad)
    else:
        _backward_input[double](gy, w, gx, stride, pad)
    return gx


def conv2d_backward_weight(gy, x, int kh, int kw, int stride, int pad):
    gy = np.ascontiguousarray(gy)
    x = np.ascontiguousarray(x)
    f = gy.shape[1]
    c = x.shape[1]
    gw = np.zeros((f, c, kh, kw), dtype=gy.dtype)
    if gy.dtype == np.float32:
        _backward_weight[float](gy, x, gw, stride, pad)
    else:
        _backward_weight[double](gy, x, gw, stride, pad)
    return gw


cdef inline Py_ssize_t _lo(Py_ssize_t k, Py_ssize_t pad, Py_ssize_t stride) noexcept:
    # smallest o with o*stride + k - pad >= 0; terms non-negative when k < pad
    if k >= pad:
        return 0
    return (pad - k + stride - 1) // stride


cdef inline Py_ssize_t _hi(Py_ssize_t k, Py_ssize_t pad, Py_ssize_t stride,
                           Py_ssize_t extent, Py_ssize_t out_extent) noexcept:
    # one past the largest o with o*stride + k - pad <= extent - 1
    cdef Py_ssize_t top = extent - 1 + pad - k
    if top < 0:
        return 0
    top = top // stride + 1
    return out_extent if top > out_extent else top


cdef void _forward(floating[:, :, :, ::1] x, floating[:, :, :, ::1] w,
                   floating[:, :, :, ::1] y, int stride, int pad) noexcept:
    cdef Py_ssize_t b = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t f = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t oh = y.shape[2], ow = y.shape[3]
    cdef Py_ssize_t ib, jf, ic, ky, kx, oy, ox, iy, base
    cdef Py_ssize_t oy_lo, oy_hi, ox_lo, ox_hi
    cdef floating wv
    for ib in range(b):
        for jf in range(f):
            for ic in range(c):
                for ky in range(kh):
                    oy_lo = _lo(ky, pad, stride)
                    oy_hi = _hi(ky, pad, stride, h, oh)
                    for kx in range(kw):
                        wv = w[jf, ic, ky, kx]
                        ox_lo = _lo(kx, pad, stride)
                        ox_hi = _hi(kx, pad, stride, wd, ow)
                        for oy in range(oy_lo, oy_hi):
                            iy = oy * stride + ky - pad
                            base = kx - pad
                            for ox in range(ox_lo, ox_hi):
                                y[ib, jf, oy, ox] += wv * x[ib, ic, iy, ox * stride + base]


cdef void _backward_input(floating[:, :, :, ::1] gy, floating[:, :, :, ::1] w,
                          floating[:, :, :, ::1] gx, int stride, int pad) noexcept:
    cdef Py_ssize_t b = gy.shape[0], f = gy.shape[1], oh = gy.shape[2], ow = gy.shape[3]
    cdef Py_ssize_t c = w.shape[1], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t h = gx.shape[2], wd = gx.shape[3]
    cdef Py_ssize_t ib, jf, ic, ky, kx, oy, ox, iy, base
    cdef Py_ssize_t oy_lo, oy_hi, ox_lo, ox_hi
    cdef floating wv
    for ib in range(b):
        for jf in range(f):
            for ic in range(c):
                for ky in range(kh):
                    oy_lo = _lo(ky, pad, stride)
                    oy_hi = _hi(ky, pad, stride, h, oh)
                    for kx in range(kw):
                        wv = w[jf, ic, ky, kx]
                        ox_lo = _lo(kx, pad, stride)
                        ox_hi = _hi(kx, pad, stride, wd, ow)
                        for oy in range(oy_lo, oy_hi):
                            iy = oy * stride + ky - pad
                            base = kx - pad
                            for ox in range(ox_lo, ox_hi):
                                gx[ib, ic, iy, ox * stride + base] += wv * gy[ib, jf, oy, ox]


cdef void _backward_weight(floating[:, :, :, ::1] gy, floating[:, :, :, ::1] x,
                           floating[:, :, :, ::1] gw, int stride, int pad) noexcept:
    cdef Py_ssize_t b = gy.shape[0], f = gy.shape[1], oh = gy.shape[2], ow = gy.shape[3]
    cdef Py_ssize_t c = x.shape[1], h = x.shape[2], wd = x.shape[3]
    cdef Py_ssize_t kh = gw.shape[2], kw = gw.shape[3]
    cdef Py_ssize_t ib, jf, ic, ky, kx, oy, ox, iy, base
    cdef Py_ssize_t oy_lo, oy_hi, ox_lo, ox_hi
    cdef floating acc
    for jf in range(f):
        for ic in range(c):
            for ky in range(kh):
                oy_lo = _lo(ky, pad, stride)
                oy_hi = _hi(ky, pad, stride, h, oh)
                for kx in range(kw):
                    ox_lo = _lo(kx, pad, stride)
                    ox_hi = _hi(kx, pad, stride, wd, ow)
                    base = kx - pad
                    acc = 0
                    for ib in range(b):
                        for oy in range(oy_lo, oy_hi):
                            iy = oy * stride + ky - pad
                            for ox in range(ox_lo, ox_hi):
                                acc += gy[ib, jf, oy, ox] * x[ib, ic, iy, ox * stride + base]
                    gw[jf, ic, ky, kx] = acc
