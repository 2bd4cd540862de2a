#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the three hot kernels on exploration-sized workloads and prints a
speedup table.  Run after building the extension:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from boxscout._kernels import _fallback

try:
    from boxscout._kernels import _native
except ImportError:
    _native = None


def timeit(fn, *args, repeats=7):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def workloads(rng):
    scores_small = rng.dirichlet(np.ones(20), size=200)
    scores_large = rng.dirichlet(np.ones(20), size=20_000)

    def boxes(n):
        x1 = rng.uniform(0, 400, n)
        y1 = rng.uniform(0, 300, n)
        return np.stack([x1, y1, x1 + rng.uniform(5, 100, n),
                         y1 + rng.uniform(5, 100, n)], axis=1)

    flags = (rng.random(5_000) < 0.3).astype(np.float64)
    return [
        ("margin_argmax 200x20", "margin_argmax", (scores_small,)),
        ("margin_argmax 20000x20", "margin_argmax", (scores_large,)),
        ("iou_matrix 100x100", "iou_matrix", (boxes(100), boxes(100))),
        ("iou_matrix 1000x300", "iou_matrix", (boxes(1000), boxes(300))),
        ("ap_from_flags 5000", "ap_from_flags", (flags, 1200)),
    ]


def main():
    rng = np.random.default_rng(0)
    rows = []
    for label, name, args in workloads(rng):
        t_py = timeit(getattr(_fallback, name), *args)
        if _native is not None:
            t_nat = timeit(getattr(_native, name), *args)
            rows.append((label, t_py, t_nat, t_py / t_nat))
        else:
            rows.append((label, t_py, None, None))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel workload':<{width}}  {'python':>10}  {'native':>10}  speedup")
    for label, t_py, t_nat, speedup in rows:
        if t_nat is None:
            print(f"{label:<{width}}  {t_py * 1e6:>8.1f}us  {'n/a':>10}")
        else:
            print(f"{label:<{width}}  {t_py * 1e6:>8.1f}us  "
                  f"{t_nat * 1e6:>8.1f}us  {speedup:>6.2f}x")
    if _native is None:
        print("\ncompiled extension not available; install with the default "
              "build to compare")


if __name__ == "__main__":
    main()
