#!/usr/bin/env python3
"""Benchmark the numba and pure-numpy builds of the hot kernels.

Covers the badness Monte Carlo kernel and the cell-pair quadrature tables
(1D separated, 1D touching, 2D separated). Both builds are always
importable; HAARDYAD_NUMBA only changes which one the library dispatches to
by default. Run:

    python benchmarks/bench_kernels.py [--trials N]
"""

import argparse
import time
from fractions import Fraction

import numpy as np

from haardyad import lattice as lat
from haardyad import quadrature as quad
from haardyad._accel import NUMBA_ENABLED


def timeit(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_badness(trials):
    params = lat.BadnessParams(16, Fraction(1, 2))
    depth = params.r + 24
    thresholds = lat.badness_thresholds(params, depth)
    bits = lat.shift_bits(7, np.arange(trials), depth).reshape(trials, depth, 1)
    # warm the jit
    lat.badness_flags(bits[:16], params.r, thresholds, use_numba=True)
    t_jit, a = timeit(lambda: lat.badness_flags(bits, params.r, thresholds,
                                                use_numba=True))
    t_np, b = timeit(lambda: lat.badness_flags(bits, params.r, thresholds,
                                               use_numba=False))
    assert np.array_equal(a, b)
    return "badness Monte Carlo", t_jit, t_np


def bench_sep_1d():
    offsets = np.concatenate([np.arange(-4096, 0), np.arange(1, 4097)])
    quad.table_1d(quad.KIND_HILBERT, 2.0 ** -10, offsets[:8], use_numba=True)
    t_jit, a = timeit(lambda: quad.table_1d(quad.KIND_HILBERT, 2.0 ** -10,
                                            offsets, use_numba=True))
    t_np, b = timeit(lambda: quad.table_1d(quad.KIND_HILBERT, 2.0 ** -10,
                                           offsets, use_numba=False))
    assert np.abs(a - b).max() <= 1e-15
    return "1d separated table (8k offsets)", t_jit, t_np


def bench_touch_1d():
    offsets = np.array([1, -1])
    quad.table_1d(quad.KIND_HILBERT, 1.0, offsets, use_numba=True)

    def run(use):
        vals = np.zeros(512)
        for i in range(256):
            vals[2 * i: 2 * i + 2] = quad.table_1d(
                quad.KIND_HILBERT, 2.0 ** -(i % 12), offsets, use_numba=use)
        return vals

    t_jit, a = timeit(lambda: run(True), repeat=2)
    t_np, b = timeit(lambda: run(False), repeat=2)
    assert np.abs(a - b).max() <= 1e-15
    return "1d touching rings (512 integrals)", t_jit, t_np


def bench_sep_2d():
    offsets = np.array([[i, j] for i in range(-24, 25) for j in range(-24, 25)
                        if max(abs(i), abs(j)) >= 2])
    quad.table_2d(quad.KIND_RIESZ1_2D, 0.5, offsets[:4], use_numba=True)
    t_jit, a = timeit(lambda: quad.table_2d(quad.KIND_RIESZ1_2D, 0.5, offsets,
                                            use_numba=True), repeat=2)
    t_np, b = timeit(lambda: quad.table_2d(quad.KIND_RIESZ1_2D, 0.5, offsets,
                                           use_numba=False), repeat=2)
    assert np.abs(a - b).max() <= 1e-15
    return "2d separated table (2.4k offsets)", t_jit, t_np


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=200_000)
    args = parser.parse_args()
    print(f"numba available and enabled by default: {NUMBA_ENABLED}")
    rows = [bench_badness(args.trials), bench_sep_1d(), bench_touch_1d(),
            bench_sep_2d()]
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'numba':>9}  {'numpy':>9}  speedup")
    for name, t_jit, t_np in rows:
        print(f"{name:<{width}}  {t_jit * 1e3:8.2f}ms  {t_np * 1e3:8.2f}ms  "
              f"{t_np / t_jit:6.2f}x")


if __name__ == "__main__":
    main()
