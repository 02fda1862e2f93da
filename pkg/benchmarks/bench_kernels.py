"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Each case runs on both backends (when the extension is built) and prints the
best wall time, the speed-up and the largest disagreement in the result.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from wqlab._kernels import NORM_CODES, available_backends, get_backend
from wqlab.measures import DiscreteMeasure, UniformBox
from wqlab.ot_exact import grid_measure, rho_exact


def _best(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases(scale: float):
    rng = np.random.default_rng(0)
    n = max(8, int(200 * scale))
    X, Y = rng.random((n, 3)), rng.random((n, 3))
    w = rng.random(n)
    mu_eq, nu_eq = DiscreteMeasure.empirical(X), DiscreteMeasure.empirical(Y)
    nu_w = DiscreteMeasure(Y, w / w.sum())
    grid, _, _ = grid_measure(UniformBox.unit(3), 3)
    sample = DiscreteMeasure.empirical(rng.random((max(8, int(64 * scale)), 3)))
    price = rng.random(n)
    big = rng.random((20 * n, 3))
    return [
        (f"c_transform {20 * n}x{n}",
         lambda b: get_backend(b).c_transform(big, Y, price, NORM_CODES["L2"], 2.0)),
        (f"simplex {n}x{n} unequal",
         lambda b: rho_exact(mu_eq, nu_w, 1, "LInf", method="simplex", backend=b)[0]),
        (f"auction {n}x{n}",
         lambda b: rho_exact(mu_eq, nu_eq, 1, "LInf", method="auction", backend=b)[0]),
        (f"semidiscrete grid {len(grid)}x{len(sample)}",
         lambda b: rho_exact(grid, sample, 1, "LInf", backend=b)[0]),
    ]


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="problem size multiplier")
    args = ap.parse_args(argv)
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'case':<34} " + " ".join(f"{b:>10}" for b in backends) + f" {'speed-up':>9} {'max diff':>10}")
    for name, fn in cases(args.scale):
        times, outs = [], []
        for b in backends:
            t, out = _best(lambda: fn(b), args.repeat)
            times.append(t)
            outs.append(np.asarray(out, dtype=float))
        speed = times[-1] / times[0] if len(times) > 1 else 1.0
        diff = max(float(np.max(np.abs(o - outs[0]))) for o in outs)
        print(f"{name:<34} " + " ".join(f"{t:>9.4f}s" for t in times) + f" {speed:>8.1f}x {diff:>10.2e}")


if __name__ == "__main__":
    main()
