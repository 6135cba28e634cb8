"""Compare the compiled split-search kernel against the numpy fallback.

The kernel scans one presorted feature column for the best Gini split; it is
the inner loop of every propensity-tree fit, which the permutation-null
pMSE-ratio repeats ~100x per report. Run:

    python3 benchmarks/bench_split.py [--n 5000] [--cols 21] [--repeats 50]
"""

import argparse
import time

import numpy as np

from tabsynth import tree
from tabsynth.tree import _best_split_sorted_py
from tabsynth.utility import CartParams, pmse
from tabsynth.data_model import ColumnSpec, Dataset

try:
    from tabsynth._split_fast import best_split_sorted as best_split_cy
except ImportError:
    best_split_cy = None


def bench_kernel(n, cols, repeats, rng):
    columns = [np.sort(rng.normal(size=n)) for _ in range(cols)]
    labels = [(rng.random(n) < 0.5).astype(float) for _ in range(cols)]
    kernels = {"python": _best_split_sorted_py}
    if best_split_cy is not None:
        kernels["cython"] = best_split_cy
    results = {}
    for name, kernel in kernels.items():
        t0 = time.perf_counter()
        for _ in range(repeats):
            for xs, ys in zip(columns, labels):
                kernel(xs, ys, 20)
        results[name] = (time.perf_counter() - t0) / repeats
    if best_split_cy is not None:
        for xs, ys in zip(columns, labels):
            a = best_split_cy(xs, ys, 20)
            b = _best_split_sorted_py(xs, ys, 20)
            assert np.allclose(a, b, equal_nan=True), "kernel disagreement"
        print("kernel agreement check: ok")
    return results


def bench_tree_fit(n, cols, rng):
    """Whole-tree timing through the public evaluation entry point."""
    schema = tuple(ColumnSpec(f"x{j}", "continuous") for j in range(cols))
    orig = Dataset(columns=schema, values=rng.normal(size=(n, cols)))
    syn = Dataset(columns=schema, values=rng.normal(size=(n, cols)))
    t0 = time.perf_counter()
    pmse(orig, syn, CartParams(), seed=0)
    return time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=5000)
    parser.add_argument("--cols", type=int, default=21)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"active kernel: {tree.KERNEL}")
    results = bench_kernel(args.n, args.cols, args.repeats, rng)
    for name, secs in results.items():
        print(f"{name:>7}: {secs * 1e3:8.3f} ms per {args.cols}-column scan (n={args.n})")
    if "cython" in results:
        print(f"speedup: {results['python'] / results['cython']:.1f}x")
    print(f"full tree fit ({args.n} + {args.n} rows): {bench_tree_fit(args.n, args.cols, rng):.3f} s")


if __name__ == "__main__":
    main()
