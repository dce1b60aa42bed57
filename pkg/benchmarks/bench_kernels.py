"""Time the compiled and pure-numpy kernels on the same inputs.

    python benchmarks/bench_kernels.py [--sizes 2000,10000,40000] [--radius 200] [--repeat 3]

Prints one row per (kernel, size) with the best-of-N wall time for each backend
and the speedup. Both backends must return identical arrays or the run aborts.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from retailrank import _kernels
from retailrank._kernels import _pykernels


def city(n: int, seed: int = 0):
    # constant venue density (~370 per km^2), so neighborhoods stay city-like as n grows
    side_deg = np.sqrt(n / 374.0) / 111.2
    rng = np.random.default_rng(seed)
    lats = 40.7 + rng.uniform(0, side_deg, n)
    lons = -74.0 + rng.uniform(0, side_deg / np.cos(np.radians(40.7)), n)
    codes = rng.integers(0, 16, n).astype(np.int64)
    return lats, lons, codes


def best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="2000,10000,40000")
    ap.add_argument("--radius", type=float, default=200.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if _kernels.compiled is None:
        print("compiled extension not built; only the numpy backend is available")
        return 1
    fast, slow = _kernels.compiled, _pykernels
    print(f"{'kernel':<26}{'n':>8}{'cython s':>12}{'numpy s':>12}{'speedup':>10}")
    for n in (int(s) for s in args.sizes.split(",")):
        lats, lons, codes = city(n)
        a = fast.neighbor_category_counts(lats, lons, codes, 16, args.radius)
        b = slow.neighbor_category_counts(lats, lons, codes, 16, args.radius)
        if not np.array_equal(a, b):
            raise SystemExit(f"backends disagree at n={n}")
        tf = best(lambda: fast.neighbor_category_counts(lats, lons, codes, 16, args.radius), args.repeat)
        ts = best(lambda: slow.neighbor_category_counts(lats, lons, codes, 16, args.radius), args.repeat)
        print(f"{'neighbor_category_counts':<26}{n:>8}{tf:>12.4f}{ts:>12.4f}{ts / tf:>9.1f}x")

        tf = best(lambda: fast.haversine_many(40.7, -74.0, lats, lons), args.repeat * 10)
        ts = best(lambda: slow.haversine_many(40.7, -74.0, lats, lons), args.repeat * 10)
        print(f"{'haversine_many':<26}{n:>8}{tf:>12.6f}{ts:>12.6f}{ts / tf:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
