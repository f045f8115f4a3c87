#!/usr/bin/env python3
"""Compare the compiled and pure-Python convolution backends.

Times conv1d_forward and conv1d_backward over a range of shapes drawn from
the fall classifier (small residual-block convs up to the full 512-channel
entry layer) and prints a table of per-call medians and speedups.

Usage: python3 benchmarks/bench_kernels.py [--iters N]
"""

import argparse
import statistics
import time

import numpy as np

from falltcn.backend import available_backends, get_backend

CASES = [
    # (label, batch, c_in, c_out, kernel, dilation, length)
    ("tiny block", 1, 8, 8, 3, 3, 30),
    ("reduced net", 4, 64, 64, 3, 9, 274),
    ("entry layer", 1, 48, 512, 3, 1, 300),
    ("full block", 1, 512, 512, 3, 27, 274),
]


def time_call(fn, iters):
    times = []
    for _ in range(iters):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--iters", type=int, default=20)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    header = f"{'case':<12} {'direction':<9}" + "".join(
        f" {name + ' (ms)':>14}" for name in backends)
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)
    print("-" * len(header))

    rng = np.random.default_rng(0)
    for label, b, cin, cout, k, d, t in CASES:
        x = rng.normal(size=(b, cin, t))
        w = rng.normal(size=(cout, cin, k))
        bias = rng.normal(size=cout)
        out = get_backend(backends[0]).conv1d_forward(x, w, bias, d)
        go = rng.normal(size=out.shape)

        for direction in ("forward", "backward"):
            row = f"{label:<12} {direction:<9}"
            medians = []
            for name in backends:
                mod = get_backend(name)
                if direction == "forward":
                    fn = lambda: mod.conv1d_forward(x, w, bias, d)
                else:
                    fn = lambda: mod.conv1d_backward(x, w, go, d)
                fn()  # warm up
                med = time_call(fn, args.iters)
                medians.append(med)
                row += f" {med * 1e3:>14.3f}"
            if len(medians) == 2:
                row += f" {medians[1] / medians[0]:>8.2f}x"
            print(row)


if __name__ == "__main__":
    main()
