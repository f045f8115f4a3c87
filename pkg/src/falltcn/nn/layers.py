"""Layers used by the two networks: dilated 1D conv, batch norm, ReLU,
inverted dropout and global average pooling.

All layers work on (B, C, L) arrays, run an explicit forward/backward pair
and accumulate parameter gradients in ``Param.grad``. Training math is f32
by default; pass dtype=np.float64 for gradient checking.
"""

import numpy as np

from .. import backend
from ..errors import ConfigError, ShapeError


class Param:
    """A trainable array with its accumulated gradient."""

    __slots__ = ("name", "data", "grad")

    def __init__(self, name, data):
        self.name = name
        self.data = np.ascontiguousarray(data)
        self.grad = np.zeros_like(self.data)

    @property
    def size(self):
        return self.data.size

    def zero_grad(self):
        self.grad[...] = 0


class Layer:
    def parameters(self):
        return []

    def state(self):
        """Named arrays persisted in checkpoints (params + running stats)."""
        return [(p.name, p.data) for p in self.parameters()]


class Conv1d(Layer):
    """Unpadded dilated convolution: L_out = L - dilation * (kernel - 1)."""

    def __init__(self, in_channels, out_channels, kernel_size, dilation=1,
                 rng=None, name="conv", dtype=np.float32):
        if dilation < 1 or kernel_size < 1:
            raise ConfigError("kernel size and dilation must be >= 1")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.dilation = dilation
        self.name = name
        fan_in = in_channels * kernel_size
        bound = np.sqrt(6.0 / fan_in)
        rng = rng or np.random.default_rng(0)
        w = rng.uniform(-bound, bound, size=(out_channels, in_channels, kernel_size))
        self.weight = Param(f"{name}.weight", w.astype(dtype))
        self.bias = Param(f"{name}.bias", np.zeros(out_channels, dtype=dtype))
        self._x = None

    @property
    def shrink(self):
        return self.dilation * (self.kernel_size - 1)

    def out_length(self, length):
        l_out = length - self.shrink
        if l_out < 1:
            raise ShapeError(
                f"{self.name}: input length {length} too short, "
                f"need at least {self.shrink + 1}"
            )
        return l_out

    def parameters(self):
        return [self.weight, self.bias]

    def forward(self, x, train=False):
        if x.ndim != 3 or x.shape[1] != self.in_channels:
            raise ShapeError(
                f"{self.name}: expected (B, {self.in_channels}, L), got {x.shape}"
            )
        self.out_length(x.shape[2])
        self._x = np.ascontiguousarray(x)
        return backend.conv1d_forward(
            self._x, self.weight.data, self.bias.data, self.dilation
        )

    def backward(self, grad_out):
        grad_out = np.ascontiguousarray(grad_out)
        gx, gw, gb = backend.conv1d_backward(
            self._x, self.weight.data, grad_out, self.dilation
        )
        self.weight.grad += gw
        self.bias.grad += gb
        return gx


class BatchNorm1d(Layer):
    def __init__(self, channels, momentum=0.1, epsilon=1e-5, name="bn",
                 dtype=np.float32):
        self.channels = channels
        self.momentum = momentum
        self.epsilon = epsilon
        self.name = name
        self.gamma = Param(f"{name}.gamma", np.ones(channels, dtype=dtype))
        self.beta = Param(f"{name}.beta", np.zeros(channels, dtype=dtype))
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self._cache = None

    def parameters(self):
        return [self.gamma, self.beta]

    def state(self):
        return super().state() + [
            (f"{self.name}.running_mean", self.running_mean),
            (f"{self.name}.running_var", self.running_var),
        ]

    def forward(self, x, train=False):
        if x.ndim != 3 or x.shape[1] != self.channels:
            raise ShapeError(f"{self.name}: expected (B, {self.channels}, L), got {x.shape}")
        if train:
            n = x.shape[0] * x.shape[2]
            mean = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            inv_std = 1.0 / np.sqrt(var + self.epsilon)
            xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
            unbiased = var * (n / (n - 1)) if n > 1 else var
            m = self.momentum
            self.running_mean[...] = (1 - m) * self.running_mean + m * mean
            self.running_var[...] = (1 - m) * self.running_var + m * unbiased
            self._cache = ("train", xhat, inv_std, n)
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.epsilon)
            xhat = (x - self.running_mean[None, :, None]) * inv_std[None, :, None]
            self._cache = ("eval", xhat, inv_std, None)
        return self.gamma.data[None, :, None] * xhat + self.beta.data[None, :, None]

    def backward(self, grad_out):
        mode, xhat, inv_std, n = self._cache
        self.gamma.grad += (grad_out * xhat).sum(axis=(0, 2))
        self.beta.grad += grad_out.sum(axis=(0, 2))
        gxhat = grad_out * self.gamma.data[None, :, None]
        if mode == "eval":
            return gxhat * inv_std[None, :, None]
        sum_g = gxhat.sum(axis=(0, 2), keepdims=True)
        sum_gx = (gxhat * xhat).sum(axis=(0, 2), keepdims=True)
        return (inv_std[None, :, None] / n) * (n * gxhat - sum_g - xhat * sum_gx)


class ReLU(Layer):
    def forward(self, x, train=False):
        self._mask = x > 0
        return x * self._mask

    def backward(self, grad_out):
        return grad_out * self._mask


class Dropout(Layer):
    """Inverted dropout: train-time scaling by 1/(1-p), identity in eval mode."""

    def __init__(self, p, rng=None):
        if not 0.0 <= p < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {p}")
        self.p = p
        self.rng = rng or np.random.default_rng(0)
        self._mask = None

    def forward(self, x, train=False):
        if not train or self.p == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.p
        self._mask = (self.rng.random(x.shape) < keep).astype(x.dtype) / keep
        return x * self._mask

    def backward(self, grad_out):
        if self._mask is None:
            return grad_out
        return grad_out * self._mask


class GlobalAvgPool(Layer):
    """(B, C, L) -> (B, C) mean over the temporal axis."""

    def forward(self, x, train=False):
        self._length = x.shape[2]
        return x.mean(axis=2)

    def backward(self, grad_out):
        return np.repeat(grad_out[:, :, None], self._length, axis=2) / self._length
