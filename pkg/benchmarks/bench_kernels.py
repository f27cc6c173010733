#!/usr/bin/env python3
"""Benchmark the numba-compiled hot kernels against the numpy fallback.

Run twice to compare backends end to end:

    python benchmarks/bench_kernels.py            # numba (default)
    CQS_NUMBA=0 python benchmarks/bench_kernels.py

The swarm kernel is also timed head-to-head in-process below, since both
implementations are importable regardless of the env flag.
"""
import time

import numpy as np

from cqs import _swarm_kernels, grid, swarm
from cqs._accel import USE_NUMBA


def time_call(fn, *args, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_swarm_kernel(n=1_000_000):
    rng = np.random.default_rng(0)
    sw = swarm.Swarm(
        ids=np.arange(n), positions=rng.normal(0, 1, n),
        codes=rng.integers(0, 3, n).astype(np.int8), mass=1.0,
        delta_x=0.2, speed=4.0, nu=0.05,
    )
    flat = swarm._sorted_segments(sw)
    keys = rng.integers(0, 1 << 20, size=n)
    order = np.argsort((flat << 20) | keys, kind="stable")
    fs = flat[order]
    cs = sw.codes[order]
    bounds = np.flatnonzero(np.diff(fs)) + 1
    seg_starts = np.concatenate(([0], bounds, [n])).astype(np.int64)
    seg_cells = fs[seg_starts[:-1]].astype(np.uint64)
    dvc = rng.normal(0, 0.002, (n, 1))
    cell_dv = np.add.reduceat(dvc[order], seg_starts[:-1], axis=0)
    args = (cs, seg_starts, seg_cells, cell_dv, 0.05, 0.5, 1, np.uint64(7))

    rows = [("numpy fallback", time_call(_swarm_kernels.exchange_and_kick_numpy, *args))]
    if USE_NUMBA:
        _swarm_kernels.exchange_and_kick_numba(*args)  # compile
        rows.append(("numba njit", time_call(_swarm_kernels.exchange_and_kick_numba, *args)))
        a = _swarm_kernels.exchange_and_kick_numba(*args)
        b = _swarm_kernels.exchange_and_kick_numpy(*args)
        assert np.array_equal(a, b), "backends disagree"
    print(f"swarm exchange/kick kernel, n = {n}:")
    for name, t in rows:
        print(f"  {name:16s} {t * 1e3:8.1f} ms")


def bench_thomas(m=100_000):
    rng = np.random.default_rng(1)
    lower = np.ones(m)
    diag = np.full(m, -4.0)
    upper = np.ones(m)
    rhs = rng.standard_normal(m)
    grid.thomas_solve(lower, diag, upper, rhs)  # compile / warm
    t = time_call(grid.thomas_solve, lower, diag, upper, rhs)
    backend = "numba" if USE_NUMBA else "numpy fallback"
    print(f"tridiagonal sweep, m = {m} ({backend}): {t * 1e3:.1f} ms")


def bench_dds_step(n=1_000_000):
    rng = np.random.default_rng(2)
    sw = swarm.Swarm(
        ids=np.arange(n), positions=rng.normal(0, 1, n),
        codes=np.zeros(n, dtype=np.int8), mass=1.0, delta_x=0.2, speed=4.0,
        nu=0.05,
    )
    out = swarm.dds_step(sw, lambda p: p, 0.004, rng)  # warm
    t0 = time.perf_counter()
    steps = 10
    for _ in range(steps):
        out = swarm.dds_step(out, lambda p: p, 0.004, rng)
    backend = "numba" if USE_NUMBA else "numpy fallback"
    print(f"full dds_step, n = {n} ({backend}): {(time.perf_counter() - t0) / steps * 1e3:.1f} ms/step")


if __name__ == "__main__":
    bench_swarm_kernel()
    bench_thomas()
    bench_dds_step()
