#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--sizes 500,2000,5000] [--repeats 5]

Times the three hot kernels on identical synthetic inputs and verifies the
outputs agree bit for bit while at it.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dualreg import _kernels_py as py_kernels
from dualreg import random_rotation

try:
    from dualreg import _kernels as c_kernels
except ImportError:
    c_kernels = None


def _inputs(rng, m):
    v = np.ascontiguousarray(rng.normal(size=(m, 3)))
    u = np.ascontiguousarray(rng.normal(size=(m, 3)))
    ns = rng.normal(size=(m, 3)); ns /= np.linalg.norm(ns, axis=1, keepdims=True)
    nt = rng.normal(size=(m, 3)); nt /= np.linalg.norm(nt, axis=1, keepdims=True)
    return v, u, np.ascontiguousarray(ns), np.ascontiguousarray(nt)


def _time(fn, repeats):
    best = np.inf
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench(m: int, repeats: int):
    rng = np.random.default_rng(7)
    v, u, ns, nt = _inputs(rng, m)
    rot = np.ascontiguousarray(random_rotation(rng))
    t = np.ascontiguousarray(rng.normal(size=3))
    # Mild scale compression keeps the consensus/violation structure non-trivial.
    u2 = np.ascontiguousarray(u * 0.9)
    cases = {
        "initial_consensus": lambda k: k.initial_consensus_mask(v, u2, ns, nt, 0, 0.8, 0.8),
        "greedy_pairwise": lambda k: k.greedy_pairwise_keep(v[: min(m, 1500)],
                                                            u2[: min(m, 1500)], 0.8),
        "inlier_mask": lambda k: k.transform_inlier_mask(v, u, rot, t, 0.5),
    }
    rows = []
    for name, call in cases.items():
        t_py, out_py = _time(lambda: call(py_kernels), repeats)
        if c_kernels is not None:
            t_c, out_c = _time(lambda: call(c_kernels), repeats)
            assert np.array_equal(out_py, out_c), f"{name}: backend outputs differ!"
            rows.append((name, m, t_py * 1e3, t_c * 1e3, t_py / t_c))
        else:
            rows.append((name, m, t_py * 1e3, float("nan"), float("nan")))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="500,2000,5000")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if c_kernels is None:
        print("compiled kernels unavailable; timing the fallback only\n")
    header = f"{'kernel':<20}{'m':>7}{'python ms':>12}{'compiled ms':>13}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for m in sizes:
        for name, size, t_py, t_c, speedup in bench(m, args.repeats):
            print(f"{name:<20}{size:>7}{t_py:>12.3f}{t_c:>13.3f}{speedup:>8.1f}x")
    print("\noutputs verified bit-identical across backends")


if __name__ == "__main__":
    main()
