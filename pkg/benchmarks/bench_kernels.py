#!/usr/bin/env python3
"""Times the compiled scan kernel against the numpy fallback.

The scan (first best-so-far position whose level clears the threshold) is
the inner loop of every Monte Carlo estimate, so this is the number that
decides whether building the extension is worth it.  Run after
``pip install -e . --no-build-isolation``:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from stoppred import _kernels_py

try:
    from stoppred import _kernels
except ImportError:
    _kernels = None


def make_batch(rng, rows, n):
    values = rng.random((rows, n))
    times_ = rng.random((rows, n))
    order = np.argsort(times_, axis=1)
    values = np.ascontiguousarray(np.take_along_axis(values, order, axis=1))
    qvals = values.copy()  # correct-prior quantiles
    lam = 1.0 / np.e
    thresh = np.ascontiguousarray(np.where(np.take_along_axis(times_, order, axis=1) <= lam, 1.0, 0.0))
    return values, qvals, thresh


def bench(fn, batch, repeats=7):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*batch)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"{'rows x n':>14} {'numpy':>12} {'cython':>12} {'speedup':>9}")
    for rows, n in [(4096, 20), (4096, 200), (16384, 50), (1024, 1000)]:
        batch = make_batch(rng, rows, n)
        t_py = bench(_kernels_py.scan_first_accept, batch)
        if _kernels is None:
            print(f"{rows:>8} x {n:<4} {t_py * 1e3:>10.2f}ms {'(not built)':>12}")
            continue
        t_cy = bench(_kernels.scan_first_accept, batch)
        pos_a, acc_a = _kernels_py.scan_first_accept(*batch)
        pos_b, acc_b = _kernels.scan_first_accept(*batch)
        assert np.array_equal(pos_a, pos_b) and np.array_equal(acc_a, acc_b)
        print(f"{rows:>8} x {n:<4} {t_py * 1e3:>10.2f}ms {t_cy * 1e3:>10.2f}ms {t_py / t_cy:>8.1f}x")


if __name__ == "__main__":
    main()
