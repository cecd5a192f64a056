#!/usr/bin/env python3
"""Benchmark the ellipsoid contact kernels: numba @njit build vs pure numpy.

Run from the repo root:

    python3 benchmarks/bench_kernels.py [--sizes 1000,10000,100000,1000000]

The numba build is also what a session uses per tick on a single point, so
the n=1 row shows the per-call overhead that matters at 100 Hz.
"""

import argparse
import time

import numpy as np

from teleus import _kernels
from teleus.geometry import EllipsoidModel


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="1,1000,10000,100000,1000000")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    model = EllipsoidModel(center=np.array([0.5, 0.15, 0.0]), semi_axes=(0.15, 0.10, 10.0))
    center, q_diag = model.center, model.q_diag
    rng = np.random.default_rng(0)

    builds = [("numpy", _kernels.penetration_np, _kernels.contact_force_np)]
    if _kernels.HAVE_NUMBA:
        builds.append(("numba", _kernels.penetration_nb, _kernels.contact_force_nb))
        # trigger compilation outside the timed region
        warm = rng.uniform(-0.2, 0.2, (8, 3)) + center
        _kernels.penetration_nb(warm, center, q_diag)
        _kernels.contact_force_nb(warm, warm * 0, center, q_diag, np.full(3, 500.0), np.full(3, 5.0))
    else:
        print("numba unavailable or disabled (TELEOP_PURE_NUMPY set): numpy build only\n")

    kp, kd = np.full(3, 500.0), np.full(3, 5.0)
    print(f"{'kernel':<16} {'n':>9} " + " ".join(f"{name:>12}" for name, *_ in builds) + ("   speedup" if len(builds) == 2 else ""))
    for n in sizes:
        pts = center + rng.uniform(-1.0, 1.0, (n, 3)) * np.array([10.0, 0.1, 0.15])
        vels = rng.normal(0.0, 0.05, (n, 3))
        for label, idx in (("penetration", 1), ("contact_force", 2)):
            times = []
            for build in builds:
                fn = build[idx]
                if label == "penetration":
                    times.append(timeit(fn, pts, center, q_diag))
                else:
                    times.append(timeit(fn, pts, vels, center, q_diag, kp, kd))
            row = f"{label:<16} {n:>9} " + " ".join(f"{t * 1e3:>10.3f}ms" for t in times)
            if len(times) == 2:
                row += f"   {times[0] / times[1]:>6.1f}x"
            print(row)


if __name__ == "__main__":
    main()
