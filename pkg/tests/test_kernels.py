"""Convolution kernel correctness: both backends against a naive loop
reference, and backend-vs-backend parity."""

import numpy as np
import pytest

from falltcn import backend
from conftest import naive_conv1d

BACKENDS = backend.available_backends()


def _case(rng, dtype=np.float64):
    b = int(rng.integers(1, 4))
    c_in = int(rng.integers(1, 5))
    c_out = int(rng.integers(1, 5))
    k = int(rng.choice([1, 2, 3]))
    d = int(rng.choice([1, 2, 3]))
    length = d * (k - 1) + int(rng.integers(1, 12))
    x = rng.normal(size=(b, c_in, length)).astype(dtype)
    w = rng.normal(size=(c_out, c_in, k)).astype(dtype)
    bias = rng.normal(size=c_out).astype(dtype)
    return x, w, bias, d


@pytest.mark.parametrize("name", BACKENDS)
def test_forward_matches_naive_loop(name, rng):
    impl = backend.get_backend(name)
    for _ in range(50):
        x, w, b, d = _case(rng)
        ref = naive_conv1d(x, w, b, d)
        out = impl.conv1d_forward(x, w, b, d)
        assert out.shape == ref.shape
        assert np.abs(out - ref).max() < 1e-12


@pytest.mark.parametrize("name", BACKENDS)
def test_backward_matches_finite_differences(name, rng):
    impl = backend.get_backend(name)
    for _ in range(5):
        x, w, b, d = _case(rng)
        go = rng.normal(size=impl.conv1d_forward(x, w, b, d).shape)
        gx, gw, gb = impl.conv1d_backward(x, w, go, d)
        step = 1e-6

        def loss(x_, w_, b_):
            return float((impl.conv1d_forward(x_, w_, b_, d) * go).sum())

        for arr, grad in ((x, gx), (w, gw), (b, gb)):
            flat = arr.reshape(-1)
            gflat = grad.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                lp = loss(x, w, b)
                flat[i] = orig - step
                lm = loss(x, w, b)
                flat[i] = orig
                fd = (lp - lm) / (2 * step)
                assert abs(fd - gflat[i]) < 1e-5 * max(1.0, abs(gflat[i]))


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")
def test_backend_parity(rng):
    py = backend.get_backend("python")
    cy = backend.get_backend("cython")
    for _ in range(30):
        x, w, b, d = _case(rng)
        o1 = py.conv1d_forward(x, w, b, d)
        o2 = cy.conv1d_forward(x, w, b, d)
        assert np.abs(o1 - o2).max() < 1e-12
        go = rng.normal(size=o1.shape)
        for a, bb in zip(py.conv1d_backward(x, w, go, d),
                         cy.conv1d_backward(x, w, go, d)):
            assert np.abs(a - bb).max() < 1e-12


@pytest.mark.parametrize("name", BACKENDS)
def test_f32_supported(name, rng):
    impl = backend.get_backend(name)
    x, w, b, d = _case(rng, dtype=np.float32)
    out = impl.conv1d_forward(x, w, b, d)
    assert out.dtype == np.float32
    ref = naive_conv1d(x.astype(np.float64), w.astype(np.float64),
                       b.astype(np.float64), d)
    assert np.abs(out - ref).max() < 1e-4


def test_set_backend_roundtrip():
    prev = backend.backend_name()
    other = [n for n in BACKENDS if n != prev]
    if other:
        backend.set_backend(other[0])
        assert backend.backend_name() == other[0]
    backend.set_backend(prev)
    assert backend.backend_name() == prev
