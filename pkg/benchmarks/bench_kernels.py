"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5] [--depth 5]

Each kernel is run once untimed first so JIT compilation is excluded.
Results are also checked for agreement.
"""
import argparse
import time

import numpy as np

from sigtaylor import _accel


def _best(fn, args, repeat):
    fn(*args)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(depth, rng):
    P, n = 2000, 256
    dt = np.full((P, n), 1.0 / n)
    dx = rng.standard_normal((P, n)) / np.sqrt(n)
    yield "sig_fold", (dt, dx, depth), f"{P} paths x {n} steps, depth {depth}"
    m = 4000
    dt1 = np.full(m, 1.0 / m)
    dx1 = rng.standard_normal(m) / np.sqrt(m)
    yield "strat_levels", (dt1, dx1, depth), f"1 path x {m} steps, depth {depth}"
    yield "sig_running", (dt1, dx1, depth), f"1 path x {m} steps, depth {depth}"
    W = np.concatenate([np.zeros((P, 1)), np.cumsum(dx, axis=1)], axis=1)
    u = 1.0 - rng.random((P, n))
    yield "bridge_max", (W, np.full(n, 1.0 / n), u), f"{P} paths x {n} steps"
    a = rng.standard_normal(_accel.n_coords(depth))
    b = rng.standard_normal(_accel.n_coords(depth))
    yield "chen_product", (a, b, depth), f"depth {depth}"


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--depth", type=int, default=5)
    args = ap.parse_args()
    if not _accel._HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}  {'max diff':>9}  case")
    for name, a, what in cases(args.depth, rng):
        t_nb, o_nb = _best(_accel.KERNELS["numba"][name], a, args.repeat)
        t_np, o_np = _best(_accel.KERNELS["numpy"][name], a, args.repeat)
        diff = float(np.max(np.abs(np.asarray(o_nb) - np.asarray(o_np))))
        print(f"{name:<14}{1e3 * t_nb:12.3f}{1e3 * t_np:12.3f}{t_np / t_nb:10.1f}  {diff:9.1e}  {what}")


if __name__ == "__main__":
    main()
