"""Numba vs pure-numpy timings for the hot kernels.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat 5]``

The first numba call compiles (or loads the on-disk cache); it is done once
before timing so the numbers are steady-state.
"""

import argparse
import timeit

import numpy as np

from equslab import _kernels


def mixture_case(K, n, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    means = rng.standard_normal((K, n))
    var_t = rng.uniform(0.1, 1.0, K)
    log_w = np.log(np.full(K, 1.0 / K))
    return x, means, 0.3, var_t, log_w


def best_of(fn, args, repeat, number):
    return min(timeit.repeat(lambda: fn(*args), repeat=repeat, number=number)) / number


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if not _kernels.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    rows = []
    for K, n in [(8, 256), (8, 768), (64, 4096)]:
        case = mixture_case(K, n)
        _kernels.mixture_score_numba(*case)
        number = 2000 if n < 1000 else 100
        t_np = best_of(_kernels.mixture_score_numpy, case, args.repeat, number)
        t_nb = best_of(_kernels.mixture_score_numba, case, args.repeat, number)
        rows.append((f"mixture_score K={K} n={n}", t_np, t_nb))

    for side in (16, 64, 256):
        img = np.random.default_rng(1).uniform(size=(side, side))
        _kernels.window_means_numba(img, 8)
        number = 2000 if side < 100 else 50
        t_np = best_of(_kernels.window_means_numpy, (img, 8), args.repeat, number)
        t_nb = best_of(_kernels.window_means_numba, (img, 8), args.repeat, number)
        rows.append((f"window_means {side}x{side} win=8", t_np, t_nb))

    print(f"{'kernel':<32}{'numpy [us]':>12}{'numba [us]':>12}{'speedup':>9}")
    for name, t_np, t_nb in rows:
        print(f"{name:<32}{t_np * 1e6:>12.2f}{t_nb * 1e6:>12.2f}{t_np / t_nb:>9.2f}")


if __name__ == "__main__":
    main()
