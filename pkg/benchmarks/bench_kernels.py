"""Compiled vs pure-Python ray-exit kernel.

Usage: python benchmarks/bench_kernels.py [--points N] [--repeat R]

Solves phi(x + s y) = 1 on a batch of interior points for every norm that
has a compiled kernel, checks the two backends agree, and prints the best
wall time of each.
"""
import argparse
import timeit

import numpy as np

from finslerlab import kernels
from finslerlab import norms as N


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "compiled":
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(0)
    cases = [
        ("euclidean", N.Euclidean(3)),
        ("ellipsoid", N.Ellipsoid((1.0, 0.6, 1.4))),
        ("quartic", N.QuarticSplit(1, 2)),
        ("powersum-4", N.PowerSum(3, 4)),
    ]
    print(f"{'norm':<12}{'points':>9}{'python s':>11}{'compiled s':>12}{'speed-up':>10}{'max rel diff':>13}")
    for name, nm in cases:
        if nm.kernel_code < 0:
            continue
        d = rng.standard_normal((args.points, 3))
        x = 0.5 * d / np.maximum(nm.value(d), 1e-12)[:, None] * rng.uniform(size=(args.points, 1))
        y = rng.standard_normal((args.points, 3))
        s_py = kernels.ray_exit(nm, x, y, backend="python")
        s_c = kernels.ray_exit(nm, x, y, backend="compiled")
        diff = float(np.max(np.abs(s_py - s_c) / np.abs(s_py)))
        t_py = min(timeit.repeat(lambda: kernels.ray_exit(nm, x, y, backend="python"), number=1, repeat=args.repeat))
        t_c = min(timeit.repeat(lambda: kernels.ray_exit(nm, x, y, backend="compiled"), number=1, repeat=args.repeat))
        print(f"{name:<12}{args.points:>9}{t_py:>11.4f}{t_c:>12.4f}{t_py / t_c:>9.1f}x{diff:>13.2e}")


if __name__ == "__main__":
    main()
