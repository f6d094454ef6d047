"""Time the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is checked
for agreement before timing.
"""
import argparse
import time

import numpy as np

from vinesearch import _pykernels

try:
    from vinesearch import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n):
    rng = np.random.default_rng(0)
    x = np.sort(rng.normal(size=n))
    y = x + rng.normal(size=n)
    y = np.round(y, 1)  # ties exercise the tau-b correction
    p = np.lexsort((y, x))
    xs, ys = np.ascontiguousarray(x[p]), np.ascontiguousarray(y[p])
    sample = np.sort(rng.normal(size=n))
    z = np.linspace(-4, 4, n)
    h = 1.06 * n ** -0.2
    return {
        "kendall_tau_sorted": (xs, ys),
        "kernel_cdf": (sample, z, h),
        "kernel_pdf": (sample, z, h),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="500,2000,8000")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; nothing to compare")
        return 1
    print(f"{'kernel':<20}{'n':>7}{'cython s':>12}{'python s':>12}{'speedup':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, a in cases(n).items():
            fc, fp = getattr(_ckernels, name), getattr(_pykernels, name)
            np.testing.assert_allclose(fc(*a), fp(*a), rtol=1e-9, atol=1e-12)
            tc = best_of(lambda: fc(*a), args.repeat)
            tp = best_of(lambda: fp(*a), args.repeat)
            print(f"{name:<20}{n:>7}{tc:>12.5f}{tp:>12.5f}{tp / tc:>10.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
