"""Time the numba pairwise-cosine kernel against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--dim 2048] [--repeat 50]

Shapes cover one enrollment matrix (5 x 14), probe scoring against 19 refs,
and a bigger block. Run without SIGCONSENSUS_DISABLE_NUMBA set, otherwise
only the numpy column is available.
"""
import argparse
import time

import numpy as np

from sigconsensus import _kernels


def best_of(fn, rows, cols, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(rows, cols)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    shapes = [(5, 14), (25, 19), (100, 100), (300, 300)]
    numba_fn = _kernels.pairwise_cosine_numba
    if numba_fn is None:
        print("numba backend unavailable; timing numpy only")
    else:
        warm = rng.standard_normal((2, args.dim))
        numba_fn(warm, warm)  # JIT compile outside the timed region

    print(f"dim={args.dim} repeat={args.repeat} (best of)")
    print(f"{'shape':>10} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'max |diff|':>11}")
    for r, c in shapes:
        rows = np.ascontiguousarray(rng.standard_normal((r, args.dim)))
        cols = np.ascontiguousarray(rng.standard_normal((c, args.dim)))
        repeat = max(3, args.repeat // max(1, (r * c) // 500))
        t_np = best_of(_kernels.pairwise_cosine_numpy, rows, cols, repeat)
        if numba_fn is None:
            print(f"{r:>4}x{c:<5} {t_np * 1e3:10.3f} {'-':>10} {'-':>8} {'-':>11}")
            continue
        t_nb = best_of(numba_fn, rows, cols, repeat)
        diff = np.max(np.abs(numba_fn(rows, cols)[0] - _kernels.pairwise_cosine_numpy(rows, cols)[0]))
        assert diff < 1e-12, f"backends disagree by {diff}"
        print(f"{r:>4}x{c:<5} {t_np * 1e3:10.3f} {t_nb * 1e3:10.3f} {t_np / t_nb:7.2f}x {diff:11.2e}")


if __name__ == "__main__":
    main()
