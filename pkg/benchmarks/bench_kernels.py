"""Compare the compiled kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the best-of-N wall time of each backend, the
speedup, and the maximum relative difference between the two results.
"""
import argparse
import timeit

import numpy as np

from qnmfield import _core_py

try:
    from qnmfield import _core
except ImportError:  # pragma: no cover
    _core = None


def cases(rng):
    j = np.arange(-200, 200)
    w = ((j + 0.5) * np.pi - 1j * np.arctanh(0.2)) / 5
    fa = rng.normal(size=w.size) + 1j * rng.normal(size=w.size)
    fx = rng.normal(size=w.size) + 1j * rng.normal(size=w.size)
    fy = rng.normal(size=w.size) + 1j * rng.normal(size=w.size)
    z = rng.normal(size=2000) * 5 + 1j * rng.normal(size=2000) * 5
    t = np.linspace(0.01, 5, 400)
    b = np.exp(-0.5j * np.arange(20000) * 0.005)
    return {
        "e1": lambda m: m.e1(z),
        "matsubara_sum": lambda m: m.matsubara_sum(w, 1.0, 0.1, 4000),
        "pole_series": lambda m: m.pole_series(fx * fy, w, t),
        "feynman_double_sum": lambda m: m.feynman_double_sum(w, fa, fx, fy, 1.3),
        "exp_integrator": lambda m: m.exp_integrator(w[200], 0.3 + 0.1j, 0j, b, 0.005),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _core is None:
        print("compiled backend not built; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8} {'max rel diff':>13}")
    for name, fn in cases(rng).items():
        tp = min(timeit.repeat(lambda: fn(_core_py), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: fn(_core), number=1, repeat=args.repeat))
        a, b = np.asarray(fn(_core_py)), np.asarray(fn(_core))
        diff = float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300))
        print(f"{name:<20} {tp * 1e3:12.3f} {tc * 1e3:12.3f} {tp / tc:8.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
