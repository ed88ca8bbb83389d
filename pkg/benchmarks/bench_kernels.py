"""Benchmark the compiled convolution backend against the numpy fallback.

Runs forward and both backward kernels over a spread of realistic layer
shapes and prints per-shape timings plus the speedup ratio. Usage:

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from polyptych.kernels import available_backends, get_backend

# (label, x shape, w shape, stride, pad) drawn from the network layer sizes
SHAPES = [
    ("enc 4->32 64px", (1, 4, 64, 64), (32, 4, 3, 3), 2, 1),
    ("enc 32->64 32px", (1, 32, 32, 32), (64, 32, 3, 3), 2, 1),
    ("res 128 8px", (1, 128, 8, 8), (128, 128, 3, 3), 1, 1),
    ("dec 64->32 32px", (1, 64, 32, 32), (32, 64, 3, 3), 1, 1),
    ("disc 3->32 64px", (1, 3, 64, 64), (32, 3, 4, 4), 2, 1),
]


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(backend, repeats):
    rows = []
    for label, xs, ws, stride, pad in SHAPES:
        rng = np.random.default_rng(0)
        x = rng.standard_normal(xs).astype(np.float32)
        w = rng.standard_normal(ws).astype(np.float32)
        y = backend.conv2d_forward(x, w, stride, pad)
        gy = np.ones_like(y)
        fwd = _time(lambda: backend.conv2d_forward(x, w, stride, pad), repeats)
        bwd_x = _time(
            lambda: backend.conv2d_backward_input(gy, w, stride, pad, xs[2], xs[3]),
            repeats)
        bwd_w = _time(
            lambda: backend.conv2d_backward_weight(gy, x, ws[2], ws[3], stride, pad),
            repeats)
        rows.append((label, fwd, bwd_x, bwd_w))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats per kernel (best-of)")
    args = parser.parse_args()

    backends = available_backends()
    print(f"available backends: {', '.join(backends)}\n")
    results = {name: bench_backend(get_backend(name), args.repeats)
               for name in backends}

    header = f"{'shape':<18} {'kernel':<6}"
    for name in backends:
        header += f" {name:>10}"
    if len(backends) == 2:
        header += f" {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for i, (label, *_rest) in enumerate(results[backends[0]]):
        for k, kernel in enumerate(("fwd", "bwd_x", "bwd_w")):
            line = f"{label if k == 0 else '':<18} {kernel:<6}"
            times = [results[name][i][k + 1] for name in backends]
            for t in times:
                line += f" {t * 1e3:>8.2f}ms"
            if len(times) == 2 and times[0] > 0:
                line += f" {times[1] / times[0]:>7.2f}x"
            print(line)
    if len(backends) == 2:
        total = [sum(r[k] for r in results[name] for k in (1, 2, 3))
                 for name in backends]
        print(f"\ntotal: {backends[0]} {total[0] * 1e3:.1f}ms, "
              f"{backends[1]} {total[1] * 1e3:.1f}ms "
              f"({total[1] / total[0]:.2f}x)")


if __name__ == "__main__":
    main()
