import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def naive_conv1d(x, weight, bias, dilation):
    """Triple-loop reference convolution, independent of the kernel modules."""
    b_, c_in, length = x.shape
    c_out, _, k = weight.shape
    l_out = length - dilation * (k - 1)
    out = np.zeros((b_, c_out, l_out), dtype=np.float64)
    for bb in range(b_):
        for c in range(c_out):
            for t in range(l_out):
                acc = float(bias[c])
                for i in range(c_in):
                    for j in range(k):
                        acc += weight[c, i, j] * x[bb, i, t + j * dilation]
                out[bb, c, t] = acc
    return out
