#!/usr/bin/env python3
"""Benchmark the compiled force kernel against the pure NumPy fallback.

Times one force assembly (repulsion + mesh attraction, the per-iteration
hot loop) across problem sizes and prints the speedup. Also verifies the
two backends agree bit-for-bit on every timed problem.

Usage:
    python benchmarks/bench_forces.py [--quick] [--workers N]
"""

import argparse
import time

import numpy as np

from esampler import forces
from esampler.mesh import MagnitudeMode, assign_magnitudes, build_grid
from esampler.targets import TargetDensity


def flat_mesh(counts):
    target = TargetDensity(name="flat", dim=2, scale="density",
                           fn=lambda x: np.ones(x.shape[:-1]))
    return assign_magnitudes(build_grid([(0, 1), (0, 1)], counts), target,
                             MagnitudeMode.NORMALIZED_DENSITY, 1.0)


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        tic = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - tic)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="small sizes only")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    if "compiled" not in forces.available_backends():
        raise SystemExit("compiled kernel not built; nothing to compare against")

    sizes = [(100, (20, 20)), (200, (40, 40)), (400, (50, 50))]
    if not args.quick:
        sizes += [(400, (100, 100)), (800, (100, 100))]

    rng = np.random.default_rng(0)
    print(f"{'particles':>9} {'grid':>9} {'pairs':>12} {'python':>10} "
          f"{'compiled':>10} {'speedup':>8}  identical")
    for n, counts in sizes:
        mesh = flat_mesh(counts)
        pos = np.ascontiguousarray(rng.uniform(0, 1, (n, 2)))
        pairs = n * n + n * mesh.n_points
        results = {}
        times = {}
        for backend in ("python", "compiled"):
            forces.use_backend(backend)
            forces.assemble_forces(pos, mesh, workers=args.workers)  # warm-up
            repeats = 3 if backend == "python" else 10
            times[backend] = best_of(
                lambda: results.__setitem__(
                    backend, forces.assemble_forces(pos, mesh, workers=args.workers)),
                repeats)
        forces.use_backend("compiled")
        same = np.array_equal(results["python"], results["compiled"])
        print(f"{n:>9} {'x'.join(map(str, counts)):>9} {pairs:>12,} "
              f"{times['python'] * 1e3:>8.1f}ms {times['compiled'] * 1e3:>8.1f}ms "
              f"{times['python'] / times['compiled']:>7.1f}x  {same}")


if __name__ == "__main__":
    main()
