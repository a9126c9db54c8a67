"""Micro-benchmark: numba kernels vs the pure-numpy fallback.

Run directly: python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from swarmtrust import kernels_jit, kernels_np
from swarmtrust.accel import USE_NUMBA


def _time(fn, *args, repeat=20):
    fn(*args)  # warm-up (numba compilation)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_flock(n=200):
    rng = np.random.default_rng(0)
    pos = rng.normal(size=(n, 3))
    vel = rng.normal(size=(n, 3))
    infl = rng.random((n, n)) < 0.3
    np.fill_diagonal(infl, False)
    target = np.zeros(3)
    args = (pos, vel, pos, vel, infl, 3.0, 1.0, 0.2, 4.5, target, 1e-3)
    return ("flock_velocities(n=%d)" % n,
            _time(kernels_np.flock_velocities, *args),
            _time(kernels_jit.flock_velocities, *args))


def bench_wmsr(n=500):
    rng = np.random.default_rng(1)
    x = rng.normal(size=n)
    adj = rng.random((n, n)) < 0.2
    adj |= adj.T
    np.fill_diagonal(adj, False)
    update = np.ones(n, dtype=bool)
    args = (x, adj, update, 2)
    return ("wmsr_round(n=%d)" % n,
            _time(kernels_np.wmsr_round, *args),
            _time(kernels_jit.wmsr_round, *args))


def bench_tau(n=400):
    rng = np.random.default_rng(2)
    adj = rng.random((n, n)) < 0.1
    adj |= adj.T
    adj_self = adj | np.eye(n, dtype=bool)
    legit = rng.random(n) < 0.8
    hidden = ~legit & (rng.random(n) < 0.5)
    args = (adj_self, legit, hidden)
    return ("tau_min(n=%d)" % n,
            _time(kernels_np.tau_min, *args),
            _time(kernels_jit.tau_min, *args))


def main():
    print(f"numba available and enabled: {USE_NUMBA}")
    print(f"{'kernel':30s} {'numpy [ms]':>12s} {'numba [ms]':>12s} "
          f"{'speedup':>8s}")
    for bench in (bench_flock, bench_wmsr, bench_tau):
        name, t_np, t_jit = bench()
        print(f"{name:30s} {t_np * 1e3:12.3f} {t_jit * 1e3:12.3f} "
              f"{t_np / t_jit:8.2f}x")


if __name__ == "__main__":
    main()
