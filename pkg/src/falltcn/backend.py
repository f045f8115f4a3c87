"""Kernel backend selection.

The dilated convolutions dominate runtime, so they exist twice: a compiled
Cython extension (``falltcn._kernels``) and a pure-numpy fallback
(``falltcn._kernels_py``). The compiled module is preferred when it imported
successfully; set ``FALLTCN_BACKEND=python`` or ``=cython`` to force one.
``benchmarks/bench_kernels.py`` compares the two.
"""

import os

from . import _kernels_py
from .errors import ConfigError

try:
    from . import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None

_BACKENDS = {}
_BACKENDS["python"] = _kernels_py
if _kernels_cy is not None:
    _BACKENDS["cython"] = _kernels_cy

_active_name = os.environ.get("FALLTCN_BACKEND", "auto")
if _active_name == "auto":
    _active_name = "cython" if _kernels_cy is not None else "python"
if _active_name not in _BACKENDS:
    raise ConfigError(
        f"FALLTCN_BACKEND={_active_name!r} unavailable; have {sorted(_BACKENDS)}"
    )
_active = _BACKENDS[_active_name]


def backend_name():
    return _active_name


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ConfigError(f"unknown backend {name!r}; have {sorted(_BACKENDS)}") from None


def set_backend(name):
    """Switch the process-wide kernel backend; returns the previous name."""
    global _active, _active_name
    prev = _active_name
    _active = get_backend(name)
    _active_name = name
    return prev


def conv1d_forward(x, weight, bias, dilation):
    return _active.conv1d_forward(x, weight, bias, dilation)


def conv1d_backward(x, weight, grad_out, dilation):
    return _active.conv1d_backward(x, weight, grad_out, dilation)
