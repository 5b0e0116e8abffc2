"""Benchmark the compiled crossing-root kernel against the pure-Python one.

The O(m^2) pairwise sweep over draw curves dominates confidence-set
construction, so the kernel backends are compared both on the raw sweep
and end to end.

Usage: python benchmarks/bench_kernels.py [--n 60] [--m 300] [--repeats 3]
"""

import argparse
import time

import numpy as np

from randinf import draw_assignments, kernels
from randinf.arfunc import draw_functions, functions_to_arrays
from randinf.csbuild import _pair_chunks, build_cs_fast
from randinf.data import ExperimentData


def make_instance(n: int, seed: int) -> ExperimentData:
    rng = np.random.default_rng(seed)
    n1 = n // 2
    z = np.zeros(n)
    z[rng.permutation(n)[:n1]] = 1.0
    strata = rng.choice([0, 1, 2], size=n, p=[0.2, 0.6, 0.2])
    d = np.where(strata == 2, 1.0, np.where((strata == 1) & (z == 1.0), 1.0, 0.0))
    y = d + rng.standard_normal(n)
    return ExperimentData.from_arrays(y, d, z)


def bench_sweep(num, den, m, repeats):
    ia_all, ib_all = next(_pair_chunks(m, m * m))
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernels.cross_roots_indexed(num, den, ia_all, ib_all)
        times.append(time.perf_counter() - t0)
    return min(times), ia_all.size


def bench_end_to_end(data, draws, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        build_cs_fast(data, draws, 0.05)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=60)
    ap.add_argument("--m", type=int, default=300)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    data = make_instance(args.n, args.seed)
    draws = draw_assignments(args.n, data.n1, args.m, seed=args.seed + 1)
    fns = draw_functions(data, draws)
    num, den = functions_to_arrays(fns)

    backends = kernels.available_backends()
    initial = kernels.active_backend()
    print(f"backends available: {', '.join(backends)}")
    print(f"instance: n={args.n}, m={args.m}, "
          f"pairs={args.m * (args.m - 1) // 2}")
    print(f"{'backend':<8}{'sweep s':>10}{'pairs/s':>12}{'full CS s':>11}")
    sweep_times = {}
    for backend in backends:
        kernels.set_backend(backend)
        sweep, pairs = bench_sweep(num, den, args.m, args.repeats)
        full = bench_end_to_end(data, draws, args.repeats)
        sweep_times[backend] = sweep
        print(f"{backend:<8}{sweep:>10.4f}{pairs / sweep:>12.0f}{full:>11.4f}")
    kernels.set_backend(initial)
    if "c" in sweep_times and "py" in sweep_times:
        print(f"compiled speedup on the sweep: "
              f"{sweep_times['py'] / sweep_times['c']:.1f}x")


if __name__ == "__main__":
    main()
