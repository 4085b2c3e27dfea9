"""Compare the numba and pure-numpy kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Both variants are imported directly, so the result does not depend on
``COMPTON_POVM_BACKEND``.
"""
import argparse
import time

import numpy as np

from compton_povm import kernels
from compton_povm._accel import HAVE_NUMBA


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--batch", type=int, default=200_000, help="chains per beta batch")
    args = p.parse_args(argv)

    rng = np.random.default_rng(0)
    thetas = rng.uniform(0.0, np.pi, (args.batch, 10))
    x, w = np.polynomial.legendre.leggauss(32)
    t = 0.5 * np.pi * (x + 1.0)
    cos_nodes, weights = np.cos(t), np.pi ** 2 * w * np.sin(t)

    cases = [
        (f"coplanar beta, {args.batch} chains x 10",
         lambda: kernels.coplanar_coefficients_numba(1.0, thetas),
         lambda: kernels.coplanar_coefficients_numpy(1.0, thetas)),
        ("sigma_tot(4), 32^4 nodes",
         lambda: kernels.nested_total_cross_section_numba(1.0, 4, cos_nodes, weights),
         lambda: kernels.nested_total_cross_section_numpy(1.0, 4, cos_nodes, weights)),
        ("sigma_tot(5), 32^5 nodes",
         lambda: kernels.nested_total_cross_section_numba(1.0, 5, cos_nodes, weights),
         lambda: kernels.nested_total_cross_section_numpy(1.0, 5, cos_nodes, weights)),
    ]
    if not HAVE_NUMBA:
        print("numba not installed: the 'numba' column runs the same Python code uncompiled")
    print(f"{'kernel':<34}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fast, slow in cases:
        fast()  # compile
        a, b = np.asarray(fast()), np.asarray(slow())
        if not np.allclose(np.ravel(a), np.ravel(b), rtol=1e-10):
            raise SystemExit(f"{name}: backends disagree")
        t_fast, t_slow = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:<34}{t_fast:>12.4f}{t_slow:>12.4f}{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
