"""Pure-numpy dilated 1D convolution kernels (fallback backend).

Layout convention everywhere: inputs are (B, C_in, L), weights (C_out, C_in, K),
outputs (B, C_out, L_out) with L_out = L - dilation * (K - 1). No padding.
"""

import numpy as np


def conv1d_forward(x, weight, bias, dilation):
    b_, c_in, length = x.shape
    c_out, _, k = weight.shape
    l_out = length - dilation * (k - 1)
    out = np.broadcast_to(bias[None, :, None], (b_, c_out, l_out)).copy()
    for j in range(k):
        seg = x[:, :, j * dilation : j * dilation + l_out]
        # (C_out, C_in) @ (B, C_in, L_out) -> (B, C_out, L_out)
        out += np.matmul(weight[:, :, j], seg)
    return out


def conv1d_backward(x, weight, grad_out, dilation):
    c_out, c_in, k = weight.shape
    l_out = grad_out.shape[2]
    grad_x = np.zeros_like(x)
    grad_w = np.empty_like(weight)
    grad_b = grad_out.sum(axis=(0, 2))
    for j in range(k):
        lo, hi = j * dilation, j * dilation + l_out
        seg = x[:, :, lo:hi]
        grad_w[:, :, j] = np.matmul(grad_out, seg.transpose(0, 2, 1)).sum(axis=0)
        grad_x[:, :, lo:hi] += np.matmul(weight[:, :, j].T, grad_out)
    return grad_x, grad_w, grad_b
