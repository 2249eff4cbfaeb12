#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure NumPy fallback.

Run after building the extension (``pip install -e . --no-build-isolation``):

    python benchmarks/bench_kernels.py
"""

import argparse
import time

import numpy as np

from steinpairs.kernels import available_backends


def _time(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=200_000)
    parser.add_argument("--length", type=int, default=20)
    parser.add_argument("--d", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; benchmarking the fallback only")

    rng = np.random.default_rng(args.seed)
    xi = (rng.random((args.rows, args.length)) < 0.4).astype(np.uint8)
    fresh = (rng.random((args.rows, args.length)) < 0.4).astype(np.uint8)

    print(f"rows={args.rows} length={args.length} d={args.d}")
    results = {}
    for name, mod in backends.items():
        t_counts = _time(lambda: mod.circular_run_counts(xi, args.d))
        t_deltas = _time(lambda: mod.window_replace_deltas(xi, fresh, args.d))
        results[name] = (t_counts, t_deltas)
        print(f"  {name:9s} circular_run_counts {t_counts * 1e3:9.1f} ms   "
              f"window_replace_deltas {t_deltas * 1e3:9.1f} ms")

    if len(backends) == 2:
        ref = backends["pure"]
        ext = backends["compiled"]
        same_counts = np.array_equal(ref.circular_run_counts(xi, args.d),
                                     ext.circular_run_counts(xi, args.d))
        same_deltas = np.array_equal(ref.window_replace_deltas(xi, fresh, args.d),
                                     ext.window_replace_deltas(xi, fresh, args.d))
        print(f"  outputs identical: counts={same_counts} deltas={same_deltas}")
        for label, idx in (("circular_run_counts", 0), ("window_replace_deltas", 1)):
            speedup = results["pure"][idx] / results["compiled"][idx]
            print(f"  speedup {label}: {speedup:.1f}x")


if __name__ == "__main__":
    main()
