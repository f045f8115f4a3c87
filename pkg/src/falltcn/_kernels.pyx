# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled dilated 1D convolution kernels.

Same contracts as ``_kernels_py``: x (B, C_in, L), weight (C_out, C_in, K),
no padding, L_out = L - dilation * (K - 1).
"""

import numpy as np

ctypedef fused real:
    float
    double


def conv1d_forward(real[:, :, ::1] x, real[:, :, ::1] weight, real[::1] bias,
                   int dilation):
    cdef Py_ssize_t B = x.shape[0], Ci = x.shape[1], L = x.shape[2]
    cdef Py_ssize_t Co = weight.shape[0], K = weight.shape[2]
    cdef Py_ssize_t Lo = L - dilation * (K - 1)
    cdef Py_ssize_t b, o, i, j, t
    cdef real wv

    if real is float:
        out_np = np.empty((B, Co, Lo), dtype=np.float32)
    else:
        out_np = np.empty((B, Co, Lo), dtype=np.float64)
    cdef real[:, :, ::1] out = out_np

    for b in range(B):
        for o in range(Co):
            for t in range(Lo):
                out[b, o, t] = bias[o]
            for i in range(Ci):
                for j in range(K):
                    wv = weight[o, i, j]
                    for t in range(Lo):
                        out[b, o, t] += wv * x[b, i, t + j * dilation]
    return out_np


def conv1d_backward(real[:, :, ::1] x, real[:, :, ::1] weight,
                    real[:, :, ::1] grad_out, int dilation):
    cdef Py_ssize_t B = x.shape[0], Ci = x.shape[1], L = x.shape[2]
    cdef Py_ssize_t Co = weight.shape[0], K = weight.shape[2]
    cdef Py_ssize_t Lo = grad_out.shape[2]
    cdef Py_ssize_t b, o, i, j, t
    cdef real wv, acc, g

    if real is float:
        dt = np.float32
    else:
        dt = np.float64
    gx_np = np.zeros((B, Ci, L), dtype=dt)
    gw_np = np.zeros((Co, Ci, K), dtype=dt)
    gb_np = np.zeros((Co,), dtype=dt)
    cdef real[:, :, ::1] gx = gx_np
    cdef real[:, :, ::1] gw = gw_np
    cdef real[::1] gb = gb_np

    for b in range(B):
        for o in range(Co):
            acc = 0
            for t in range(Lo):
                acc += grad_out[b, o, t]
            gb[o] += acc
            for i in range(Ci):
                for j in range(K):
                    wv = weight[o, i, j]
                    acc = 0
                    for t in range(Lo):
                        g = grad_out[b, o, t]
                        acc += g * x[b, i, t + j * dilation]
                        gx[b, i, t + j * dilation] += wv * g
                    gw[o, i, j] += acc
    return gx_np, gw_np, gb_np
