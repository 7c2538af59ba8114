"""Compiled vs pure-numpy kernels on one simulation-sized lasso path.

Usage:
    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --n 500 --p 1000 --repeat 3 --json out.json

Both paths solve the same problems; the script reports wall time per call,
the speed-up, and the largest coefficient difference between the two.
"""

import argparse
import json
import time

import numpy as np

from lcvt import _accel, kernels
from lcvt.lasso import LassoConfig, _lambda_max, _make_path, _prepare


def make_problem(n, p, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[:5] = [1.0, 0.87, 0.87, 0.87, 0.87]
    y = X @ beta + rng.standard_normal(n)
    cfg = LassoConfig()
    work = _prepare(X, y, cfg)
    path = _make_path(_lambda_max(work), cfg, n, p)
    return work, path.values, cfg


def time_call(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_path(work, lambdas, cfg, use_numba, repeat):
    def call():
        return kernels.cd_path(work.X, work.y, work.v, work.excluded, lambdas,
                               np.zeros(work.X.shape[1]), cfg.tol, 0.5 * cfg.tol,
                               cfg.max_iters, use_numba=use_numba)
    return time_call(call, repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--p", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args()

    if not _accel.NUMBA_INSTALLED:
        raise SystemExit("numba is not installed; nothing to compare")

    work, lambdas, cfg = make_problem(args.n, args.p, args.seed)
    # compile outside the timed region
    kernels.cd_path(work.X, work.y, work.v, work.excluded, lambdas[:3],
                    np.zeros(args.p), cfg.tol, 0.5 * cfg.tol, 100, use_numba=True)
    kernels.residual_moments(np.ones(4), use_numba=True)

    t_nb, (b_nb, it_nb, _) = bench_path(work, lambdas, cfg, True, args.repeat)
    t_np, (b_np, it_np, _) = bench_path(work, lambdas, cfg, False, max(1, args.repeat // 3))
    e = np.random.default_rng(args.seed).standard_normal(args.n * 200)
    t_mnb, _ = time_call(lambda: kernels.residual_moments(e, use_numba=True), 20)
    t_mnp, _ = time_call(lambda: kernels.residual_moments(e, use_numba=False), 20)

    results = {
        "n": args.n, "p": args.p, "n_lambda": len(lambdas),
        "path_numba_s": t_nb, "path_numpy_s": t_np, "path_speedup": t_np / t_nb,
        "path_cycles_numba": int(it_nb.sum()), "path_cycles_numpy": int(it_np.sum()),
        "path_max_abs_diff": float(np.abs(b_nb - b_np).max()),
        "moments_len": len(e), "moments_numba_s": t_mnb, "moments_numpy_s": t_mnp,
        "moments_speedup": t_mnp / t_mnb,
    }
    print(f"lasso path n={args.n} p={args.p} ({len(lambdas)} penalties)")
    print(f"  numba   {t_nb * 1e3:9.1f} ms   {results['path_cycles_numba']} cycles")
    print(f"  numpy   {t_np * 1e3:9.1f} ms   {results['path_cycles_numpy']} cycles")
    print(f"  speedup {results['path_speedup']:9.1f}x   max |diff| {results['path_max_abs_diff']:.1e}")
    print(f"residual moments, {len(e)} values")
    print(f"  numba   {t_mnb * 1e3:9.2f} ms")
    print(f"  numpy   {t_mnp * 1e3:9.2f} ms   speedup {results['moments_speedup']:.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
