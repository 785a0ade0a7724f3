"""Implicit Euler (Crandall-Liggett) time stepping of the H^{-s} TV flow.

``u(t_i) = J_tau u(t_{i-1})`` where ``J_tau`` is the resolvent solved by
:class:`~hstvflow.solver.ProxSolver`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .diffops import tv_phys
from .errors import ConfigurationError
from .solver import ProxSolver, SolverParams
from .spectral import SpectralCache, hs_norm

__all__ = ["FlowParams", "StepRecord", "Trajectory", "evolve", "detect_extinction", "discrete_speed"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowParams:
    """Outer time-stepping parameters.

    ``tau`` must agree with ``solver.tau``; pass ``solver=None`` to build
    default solver parameters from `s` and `tau`.  ``extinction_eps`` of
    ``None`` means ``1e-3 * (max(u0) - min(u0))``.
    """

    tau: float
    steps: int
    solver: SolverParams | None = None
    s: float | None = None
    snapshot_every: int = 1
    warm_start: bool = True
    abort_on_nonconverged: bool = False
    stop_at_extinction: bool = True
    extinction_eps: float | None = None

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigurationError(f"steps must be a positive integer, got {self.steps!r}")
        if int(self.snapshot_every) != self.snapshot_every or self.snapshot_every < 1:
            raise ConfigurationError(f"snapshot_every must be >= 1, got {self.snapshot_every!r}")
        solver = self.solver
        if solver is None:
            if self.s is None:
                raise ConfigurationError("give either solver parameters or s")
            solver = SolverParams(s=self.s, tau=self.tau)
        elif solver.tau != self.tau:
            raise ConfigurationError(
                f"flow tau={self.tau} differs from solver tau={solver.tau}"
            )
        if self.s is not None and self.s != solver.s:
            raise ConfigurationError(f"flow s={self.s} differs from solver s={solver.s}")
        object.__setattr__(self, "solver", solver)
        object.__setattr__(self, "s", solver.s)
        if self.extinction_eps is not None and not self.extinction_eps > 0:
            raise ConfigurationError("extinction_eps must be positive")

    def with_solver(self, **changes) -> "FlowParams":
        return replace(self, solver=replace(self.solver, **changes))


@dataclass
class StepRecord:
    """Diagnostics of one implicit step ``t_{i-1} -> t_i``."""

    t: float
    tv: float
    speed: float
    iterations: int
    converged: bool
    gap: float
    max_jump: float


@dataclass
class Trajectory:
    cache: SpectralCache
    tau: float
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    extinction_time: float | None = None
    aborted: bool = False
    lam: float | None = None
    final_z: np.ndarray | None = None

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.records)

    def series(self, name: str) -> np.ndarray:
        """Per-step series of a :class:`StepRecord` attribute as an array."""
        return np.array([getattr(r, name) for r in self.records])


def _spread(u: np.ndarray) -> float:
    return float(np.max(u) - np.min(u))


def evolve(u0, params: FlowParams, cache: SpectralCache, backend=None, z0=None) -> Trajectory:
    """Run the implicit scheme from `u0` for ``params.steps`` steps.

    `z0` warm-starts the first inner solve; passing ``traj.final_z`` with
    ``u0 = traj.final`` resumes an earlier run.  Snapshots are stored at ``t_0``, every ``snapshot_every`` steps, and at
    the last computed step.  The run halts early once the spread
    ``max(u) - min(u)`` falls below the extinction threshold (unless
    ``stop_at_extinction`` is off), or after a non-converged step when
    ``abort_on_nonconverged`` is set.
    """
    u = np.array(cache.grid.check(u0, "u0"), dtype=float)
    if not np.all(np.isfinite(u)):
        raise ConfigurationError("initial data has non-finite entries")
    tau = params.tau
    solver = ProxSolver(params.solver, cache, backend)
    eps = params.extinction_eps
    if eps is None:
        eps = 1e-3 * _spread(u)
    traj = Trajectory(cache=cache, tau=tau, lam=solver.lam)
    traj.times.append(0.0)
    traj.snapshots.append(u.copy())

    if _spread(u) <= eps:
        traj.extinction_time = 0.0
        if params.stop_at_extinction:
            return traj

    z = None if z0 is None else cache.grid.check(z0, "z0")
    for i in range(1, params.steps + 1):
        res = solver.solve(u, z0=z if (params.warm_start or i == 1) else None, record_history=False)
        t = i * tau
        speed = hs_norm(cache, res.u - u) / tau
        u = res.u
        z = res.z
        traj.final_z = z
        traj.records.append(
            StepRecord(
                t=t,
                tv=tv_phys(u),
                speed=speed,
                iterations=res.iterations,
                converged=res.converged,
                gap=res.gap,
                max_jump=float(np.max(np.abs(np.roll(u, -1) - u))),
            )
        )
        if not res.converged:
            log.warning("step %d (t=%g): inner solver stopped at max_iter, rel. gap %.3e",
                        i, t, res.relative_gap)
        extinct = traj.extinction_time is None and _spread(u) < eps
        if extinct:
            traj.extinction_time = t
        abort = params.abort_on_nonconverged and not res.converged
        stop = abort or (extinct and params.stop_at_extinction) or i == params.steps
        if i % params.snapshot_every == 0 or stop:
            traj.times.append(t)
            traj.snapshots.append(u.copy())
        if abort:
            traj.aborted = True
        if stop:
            break
    return traj


def detect_extinction(traj: Trajectory, eps: float):
    """First stored time whose snapshot spread is below `eps`, or ``None``."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    for t, u in zip(traj.times, traj.snapshots):
        if _spread(u) < eps:
            return t
    return None


def discrete_speed(traj: Trajectory) -> list:
    """``||u(t_i) - u(t_{i-1})||_{-s} / (t_i - t_{i-1})`` between stored snapshots."""
    if len(traj.snapshots) < 2:
        raise ValueError("need at least two snapshots")
    out = []
    for (t0, a), (t1, b) in zip(
        zip(traj.times, traj.snapshots), zip(traj.times[1:], traj.snapshots[1:])
    ):
        out.append(hs_norm(traj.cache, b - a) / (t1 - t0))
    return out
