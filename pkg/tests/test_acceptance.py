"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (lines are printed with capture disabled) or directly with
``python3 tests/test_acceptance.py``.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import brute_force_prox, laplacian_matrix, naive_dft, richardson_smoothed_prox  # noqa: E402

from hstvflow.diffops import div, grad  # noqa: E402
from hstvflow.experiment import initial_f, initial_g  # noqa: E402
from hstvflow.flow import FlowParams, evolve  # noqa: E402
from hstvflow.solver import SolverParams, dual_energy, dual_step, solve_prox, stability_max_lambda  # noqa: E402
from hstvflow.spectral import (  # noqa: E402
    Grid,
    SpectralCache,
    apply_frac_power,
    dft,
    laplacian_eigenvalues,
)

EXPERIMENT_GRID = Grid.cell_centred(-10.0, 10.0, 0.1)

# every acceptance flow run, for the mass check
_RUNS = {}


def _report(num, title, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {title}: {detail} ({elapsed:.1f}s, limit {limit:g}s)"
    return ok, line


def criterion_1():
    t0 = time.perf_counter()
    expected = {0.0: (0.05, 4e-2), 0.5: (2.5e-3, 2e-3), 1.0: (1.25e-4, 1e-4)}
    worst = 0.0
    ok = EXPERIMENT_GRID.N == 200
    for s, (bound, lam) in expected.items():
        cache = SpectralCache(EXPERIMENT_GRID, s)
        got = stability_max_lambda(s, 0.1, cache)
        worst = max(worst, abs(got - bound) / bound)
        ok &= SolverParams(s=s, tau=0.1, lam=lam).resolve_lambda(cache) == lam
    ok &= worst <= 1e-12
    return _report(1, "stability bounds", ok, f"max rel. error {worst:.1e}, reference lambdas accepted",
                   time.perf_counter() - t0, 1)


def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    grid = Grid(64, 1.0)
    worst = -np.inf
    total_iters = 0
    explicit_ok = True
    for s in (0.0, 0.5, 1.0):
        cache = SpectralCache(grid, s)
        params = SolverParams(s=s, tau=1.0, tol_gap=1e-9, tol_z=0.0, max_iter=100_000)
        for _ in range(20):
            f = rng.standard_normal(64)
            f -= f.mean()
            res = solve_prox(f, params, cache)
            e = res.history.dual_energy
            total_iters += len(e) - 1
            worst = max(worst, np.max(np.diff(e)) / e[0])
            # spot check the first iterates through the explicit spectral route
            z = np.zeros(64)
            prev = dual_energy(z, f, params, cache)
            for _ in range(50):
                z = dual_step(z, f, params, cache)
                cur = dual_energy(z, f, params, cache)
                explicit_ok &= cur <= prev + 1e-12 * e[0]
                prev = cur
    ok = worst <= 1e-12 and explicit_ok
    return _report(2, "dual energy monotone", ok,
                   f"max (F(z^k+1)-F(z^k))/F(z^0) = {worst:.1e} over {total_iters} iterations",
                   time.perf_counter() - t0, 30)


def criterion_3():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst_bf = worst_sm = worst_gap = 0.0
    for n in (4, 8):
        cache = SpectralCache(Grid(n, 1.0), 0.0)
        params = SolverParams(s=0.0, tau=1.0, tol_gap=1e-13, tol_z=0.0, max_iter=1_000_000)
        for _ in range(10):
            f = 2.0 * rng.standard_normal(n)
            res = solve_prox(f, params, cache, record_history=False)
            u_bf, _ = brute_force_prox(f, 1.0, 0.0, 1.0, res.lam / 10, iters=10_000_000)
            u_sm = richardson_smoothed_prox(f, 1.0, 0.0, 1.0)
            worst_bf = max(worst_bf, np.max(np.abs(res.u - u_bf)))
            worst_sm = max(worst_sm, np.max(np.abs(res.u - u_sm)))
            worst_gap = max(worst_gap, res.relative_gap)
    ok = worst_bf <= 1e-6 and worst_gap <= 1e-8 and worst_sm <= 1e-3
    return _report(3, "oracle equivalence", ok,
                   f"sup error vs brute force {worst_bf:.1e}, vs smoothed {worst_sm:.1e}, "
                   f"max gap/(1+|P|) {worst_gap:.1e}",
                   time.perf_counter() - t0, 120)


def _g_run():
    if "g" not in _RUNS:
        cache = SpectralCache(EXPERIMENT_GRID, 0.0)
        t0 = time.perf_counter()
        traj = evolve(initial_g(EXPERIMENT_GRID.x), FlowParams(tau=0.1, steps=400, s=0.0), cache)
        _RUNS["g"] = (traj, time.perf_counter() - t0)
    return _RUNS["g"]


def criterion_4():
    traj, elapsed = _g_run()
    t0 = time.perf_counter()
    t = np.array(traj.times)
    sel = t <= 2.0 + 1e-9
    top = np.array([u.max() for u in traj.snapshots])[sel]
    bottom = np.array([u.min() for u in traj.snapshots])[sel]
    down = -np.polyfit(t[sel], top, 1)[0]
    up = np.polyfit(t[sel], bottom, 1)[0]
    ok = abs(down / 0.5 - 1) <= 0.02 and abs(up / 0.125 - 1) <= 0.02
    return _report(4, "facet speeds", ok, f"plateau rate {down:.6f} (0.5), background rate {up:.6f} (0.125)",
                   elapsed + time.perf_counter() - t0, 60)


def criterion_5():
    traj, elapsed = _g_run()
    t_ext = traj.extinction_time
    final_err = np.max(np.abs(traj.final - 4.0))
    ok = t_ext is not None and abs(t_ext - 32.0) <= 0.5 and final_err <= 1e-2
    return _report(5, "extinction to the mean", ok,
                   f"extinct at t={t_ext}, max|u-4| = {final_err:.1e}", elapsed, 300)


class _Run:
    """Concatenated snapshots of several chunked ``evolve`` calls."""

    def __init__(self, u0):
        self.times, self.snapshots, self.converged = [0.0], [u0], []


def _shrink_time(s):
    """First step time at which ``max(u)-min(u)`` is 90% of its initial value or less."""
    key = f"f{s}"
    if key not in _RUNS:
        t0 = time.perf_counter()
        cache = SpectralCache(EXPERIMENT_GRID, s)
        u0 = initial_f(EXPERIMENT_GRID.x)
        target = 0.9 * (u0.max() - u0.min())
        run = _Run(u0)
        params = FlowParams(tau=0.1, steps=10, s=s, stop_at_extinction=False)
        hit, z = None, None
        while hit is None and run.times[-1] < 20.0:
            traj = evolve(run.snapshots[-1], params, cache, z0=z)
            z = traj.final_z
            offset = run.times[-1]
            run.times += [round(offset + t, 10) for t in traj.times[1:]]
            run.snapshots += traj.snapshots[1:]
            run.converged += list(traj.series("converged"))
            hit = next((t for t, u in zip(run.times, run.snapshots) if u.max() - u.min() <= target), None)
        _RUNS[key] = (run, time.perf_counter() - t0, hit, sum(run.converged), len(run.converged))
    return _RUNS[key]


def criterion_7():
    times, elapsed, notes = [], 0.0, []
    for s in (0.0, 0.5, 1.0):
        _, dt, t, conv, steps = _shrink_time(s)
        times.append(np.inf if t is None else t)
        elapsed += dt
        notes.append(f"s={s:g}: t={t} ({conv}/{steps} steps converged)")
    ok = times[0] < times[1] < times[2] < np.inf
    return _report(7, "slower motion for larger s", ok, "; ".join(notes), elapsed, 600)


def criterion_6():
    t0 = time.perf_counter()
    _g_run()
    for s in (0.0, 0.5, 1.0):
        _shrink_time(s)
    worst = 0.0
    for run in _RUNS.values():
        traj = run[0]
        u0 = traj.snapshots[0]
        drift = max(abs(u.mean() - u0.mean()) for u in traj.snapshots)
        worst = max(worst, drift / np.linalg.norm(u0))
    return _report(6, "mass conservation", worst <= 1e-9,
                   f"max |mean(u)-mean(u0)|/||u0|| = {worst:.1e} over {len(_RUNS)} runs",
                   time.perf_counter() - t0, 600)


def criterion_8():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst = {"plancherel": 0.0, "adjoint": 0.0, "semigroup": 0.0, "eigenvalues": 0.0, "dft": 0.0}
    for n in range(2, 65):
        h = float(rng.uniform(0.05, 2.0))
        grid = Grid(n, h)
        u = rng.standard_normal(n)
        z = rng.standard_normal(n)
        uh = dft(u)
        worst["dft"] = max(worst["dft"], np.max(np.abs(uh - naive_dft(u))) / np.max(np.abs(uh)))
        worst["plancherel"] = max(worst["plancherel"],
                                  abs(np.sum(np.abs(uh) ** 2) / n - u @ u) / (u @ u))
        lhs, rhs = grad(u, h) @ z, u @ div(z, h)
        worst["adjoint"] = max(worst["adjoint"],
                               abs(lhs - rhs) / (np.linalg.norm(grad(u, h)) * np.linalg.norm(z)))
        mu = laplacian_eigenvalues(grid)
        ref = 4 / h**2 * np.sin(np.pi * np.arange(n) / n) ** 2
        worst["eigenvalues"] = max(worst["eigenvalues"], np.max(np.abs(mu - ref)) / np.max(ref))
        mu_dense = np.sort(np.linalg.eigvalsh(laplacian_matrix(n, h)))
        worst["eigenvalues"] = max(worst["eigenvalues"],
                                   np.max(np.abs(np.sort(mu) - mu_dense)) / np.max(ref))
        for s1, s2 in [(0.3, 0.5), (1.0, -0.5), (-0.7, 0.2), (0.25, 0.75)]:
            cache = SpectralCache(grid, 0.0)
            a = apply_frac_power(cache, apply_frac_power(cache, u, s=s1), s=s2)
            b = apply_frac_power(cache, u, s=s1 + s2)
            worst["semigroup"] = max(worst["semigroup"],
                                     np.max(np.abs(a - b)) / max(np.max(np.abs(b)), np.max(np.abs(u))))
    ok = all(v <= 1e-10 for v in worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    return _report(8, "spectral identities", ok, detail, time.perf_counter() - t0, 10)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8]


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 9)])
def test_acceptance(criterion, capsys):
    ok, line = criterion()
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
