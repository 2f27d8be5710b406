"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]
"""
import argparse
import json
import math
import time

import numpy as np

from extremeabc import _backend, streams
from extremeabc.corrfuncs import CorrelationModel
from extremeabc.design import SpatialDesign
from extremeabc.maxstable import field_factor
from extremeabc.summaries import triangle_dissimilarities


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases():
    gen = np.random.default_rng(0)
    d = SpatialDesign.uniform_square(10, gen)
    factor = field_factor(CorrelationModel("whittle-matern", 1.0, 1.0)(d.distances))
    nu = np.full(2000, 1.7)
    x = np.geomspace(1e-3, 30, 2000)
    z = 1 / -np.log(gen.random((100, 10)))
    trip = d.triplets
    d20 = SpatialDesign.uniform_square(14, gen)
    sq = triangle_dissimilarities(d20.triangle_sides) ** 2

    def sim(kern):
        out = np.empty((100, 10))
        kern.simulate_blocks(factor, streams.BlockStreams.from_seed(1, 1), 100, 4.0, 10 ** 6, out)

    return {
        "matern (2000 points)": lambda k: k.matern(nu, x),
        "simulate 100 blocks, D=10": sim,
        "triplet theta, 120 triplets x 100 blocks": lambda k: k.triplet_theta(z, trip),
        f"ward, {sq.shape[0]} triangles -> 50": lambda k: k.ward_roots(sq, 50),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="also write the timings to this file")
    args = ap.parse_args()
    try:
        cy = _backend.kernels("cython")
    except ImportError:
        raise SystemExit("the compiled kernels are not built; run pip install -e . first")
    py = _backend.kernels("python")
    rows = []
    print(f"{'kernel':<44}{'cython ms':>12}{'python ms':>12}{'speedup':>10}")
    for name, fn in cases().items():
        tc = _best(lambda: fn(cy), args.repeat)
        tp = _best(lambda: fn(py), max(1, math.ceil(args.repeat / 3)))
        rows.append({"kernel": name, "cython_s": tc, "python_s": tp, "speedup": tp / tc})
        print(f"{name:<44}{1e3 * tc:>12.3f}{1e3 * tp:>12.1f}{tp / tc:>9.0f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
