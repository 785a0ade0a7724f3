"""Time the inner dual loop: compiled kernel against the numpy fallback.

Each case runs a fixed number of iterations (stopping tests disabled) from
``z = 0`` on the experiment grid and reports microseconds per iteration, the
speed-up, and the largest difference between the two backends' results.

    python3 benchmarks/bench_kernels.py [--iters 20000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from hstvflow.experiment import initial_f, initial_g
from hstvflow.kernels import BACKENDS
from hstvflow.solver import ProxSolver, SolverParams
from hstvflow.spectral import Grid, SpectralCache


def time_backend(solver, f, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = solver.solve(f, record_history=False)
        best = min(best, time.perf_counter() - t0)
    return best, res


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iters", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--h", type=float, default=0.1)
    args = ap.parse_args(argv)

    grid = Grid.cell_centred(-10.0, 10.0, args.h)
    names = [b for b in ("cython", "python") if b in BACKENDS]
    if len(names) < 2:
        print("compiled extension not available; timing the fallback only")
    header = f"{'case':<14}" + "".join(f"{n + ' us/it':>16}" for n in names)
    if len(names) == 2:
        header += f"{'speed-up':>10}{'max |du|':>11}"
    print(f"N={grid.N}, {args.iters} iterations per solve, best of {args.repeat}")
    print(header)
    for data_name, data in (("g", initial_g), ("f", initial_f)):
        f = data(grid.x)
        for s in (0.0, 0.5, 1.0):
            cache = SpectralCache(grid, s)
            params = SolverParams(s=s, tau=0.1, tol_z=0.0, tol_gap=0.0, max_iter=args.iters)
            per_it, results = [], []
            for name in names:
                secs, res = time_backend(ProxSolver(params, cache, name), f, args.repeat)
                per_it.append(1e6 * secs / res.iterations)
                results.append(res.u)
            row = f"{data_name}, s={s:<9g}" + "".join(f"{t:>16.2f}" for t in per_it)
            if len(names) == 2:
                diff = np.max(np.abs(results[0] - results[1]))
                row += f"{per_it[1] / per_it[0]:>9.1f}x{diff:>11.1e}"
            print(row)


if __name__ == "__main__":
    main()
