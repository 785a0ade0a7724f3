"""One implicit Euler step of the H^{-s} total variation flow.

The step solves

    min_u  1/(2 tau) ||u - f||_{-s}^2 + sum_j |(grad u)_j|

through its dual over ``Z = {z : |z_j| <= 1}``,

    min_{z in Z}  F(z) = 1/(2 tau) ||f + tau L^s div z||_{-s}^2,

by projected gradient descent on ``z`` (forward-backward splitting).  The
primal solution is recovered as ``u = f + tau L^s div z = f - tau v`` with
``v = -L^s div z``.  The iteration is monotone in ``F`` whenever
``tau * lam * mu_max^(s+1) < 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .diffops import div, grad, project_ball, tv
from .errors import ConfigurationError, ContractViolation, DivergenceError
from .spectral import SpectralCache, apply_frac_power, hs_norm

__all__ = [
    "AUTO",
    "SolverParams",
    "IterationHistory",
    "ProxResult",
    "ProxSolver",
    "RunningAverage",
    "stability_max_lambda",
    "dual_step",
    "dual_energy",
    "primal_energy",
    "duality_gap",
    "solve_prox",
    "ergodic_average",
]

AUTO = "auto"

STATUS_NAMES = {0: "max_iter", 1: "increment", 2: "gap", -1: "diverged"}


def stability_max_lambda(s: float, tau: float, cache: SpectralCache) -> float:
    """Supremum of admissible splitting steps, ``2 / (tau * mu_max^(s+1))``."""
    if not tau > 0:
        raise ConfigurationError(f"tau must be positive, got {tau!r}")
    return 2.0 / (tau * cache.mu_max ** (s + 1.0))


@dataclass(frozen=True)
class SolverParams:
    """Parameters of the inner dual iteration.

    ``lam`` is either a positive float or :data:`AUTO`, which resolves to
    ``safety * stability_max_lambda``.  ``ergodic_p`` is the exponent of the
    averaging weights ``beta_k = (k+1)^-p`` and must lie in ``(1/2, 1]``.
    """

    s: float
    tau: float
    lam: float | str = AUTO
    tol_z: float = 1e-8
    tol_gap: float = 1e-7
    max_iter: int = 200_000
    ergodic: bool = False
    ergodic_p: float = 1.0
    safety: float = 0.9

    def __post_init__(self):
        if not (0.0 <= self.s <= 1.0):
            raise ConfigurationError(f"s must lie in [0, 1], got {self.s!r}")
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ConfigurationError(f"tau must be positive, got {self.tau!r}")
        if isinstance(self.lam, str):
            if self.lam.lower() != AUTO:
                raise ConfigurationError(f"lambda must be a number or 'auto', got {self.lam!r}")
            object.__setattr__(self, "lam", AUTO)
        elif not (math.isfinite(self.lam) and self.lam > 0):
            raise ConfigurationError(f"lambda must be positive, got {self.lam!r}")
        if self.tol_z < 0 or self.tol_gap < 0:
            raise ConfigurationError("tolerances must be non-negative")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if not (0.0 < self.safety < 1.0):
            raise ConfigurationError(f"safety must lie in (0, 1), got {self.safety!r}")
        if not (0.5 < self.ergodic_p <= 1.0):
            raise ConfigurationError(f"ergodic_p must lie in (1/2, 1], got {self.ergodic_p!r}")

    def resolve_lambda(self, cache: SpectralCache) -> float:
        """Concrete step for `cache`; raises if an explicit step breaks the bound."""
        bound = stability_max_lambda(self.s, self.tau, cache)
        if self.lam == AUTO:
            return self.safety * bound
        if not self.lam < bound:
            raise ConfigurationError(
                f"lambda={self.lam:g} violates the stability bound "
                f"mu_max^(s+1)*lambda*tau < 2, i.e. lambda < {bound:.6g} "
                f"(s={self.s:g}, tau={self.tau:g}, mu_max={cache.mu_max:.6g})"
            )
        return float(self.lam)


@dataclass
class IterationHistory:
    """Per-iterate records, index 0 being the starting point."""

    dual_energy: np.ndarray
    primal_energy: np.ndarray
    gap: np.ndarray
    increment: np.ndarray

    def __len__(self):
        return len(self.dual_energy)


@dataclass
class ProxResult:
    u: np.ndarray
    z: np.ndarray
    v: np.ndarray
    iterations: int
    converged: bool
    status: str
    lam: float
    gap: float
    primal: float
    history: IterationHistory | None = None
    ergodic_u: np.ndarray | None = None
    ergodic_z: np.ndarray | None = None

    @property
    def relative_gap(self) -> float:
        return self.gap / (1.0 + abs(self.primal))


def _check_cache(params: SolverParams, cache: SpectralCache):
    if params.s != cache.s:
        raise ConfigurationError(
            f"solver s={params.s} does not match spectral cache s={cache.s}"
        )


def dual_energy(z, f, params: SolverParams, cache: SpectralCache) -> float:
    """``F(z) = 1/(2 tau) ||tau L^s div z + f||_{-s}^2`` (``+inf`` outside ``Z``)."""
    z = cache.grid.check(z, "z")
    f = cache.grid.check(f, "f")
    if np.max(np.abs(z)) > 1.0:
        return math.inf
    q = f + params.tau * apply_frac_power(cache, div(z, cache.grid.h))
    return hs_norm(cache, q) ** 2 / (2.0 * params.tau)


def primal_energy(u, f, params: SolverParams, cache: SpectralCache) -> float:
    """``1/(2 tau) ||u - f||_{-s}^2 + sum |grad u|``."""
    u = cache.grid.check(u, "u")
    f = cache.grid.check(f, "f")
    return hs_norm(cache, u - f) ** 2 / (2.0 * params.tau) + tv(u, cache.grid.h)


def duality_gap(u, z, f, params: SolverParams, cache: SpectralCache) -> float:
    """Fenchel gap between the primal value at `u` and the dual value at `z`.

    Non-negative for feasible `z` and zero exactly at the optimum.

    Raises
    ------
    ContractViolation
        If ``u != f + tau L^s div z`` beyond round-off, or `z` is infeasible.
    """
    _check_cache(params, cache)
    u = cache.grid.check(u, "u")
    z = cache.grid.check(z, "z")
    f = cache.grid.check(f, "f")
    if np.max(np.abs(z)) > 1.0 + 1e-12:
        raise ContractViolation("z lies outside the unit ball")
    expected = f + params.tau * apply_frac_power(cache, div(z, cache.grid.h))
    scale = 1.0 + np.max(np.abs(f)) + np.max(np.abs(expected))
    if np.max(np.abs(u - expected)) > 1e-9 * scale:
        raise ContractViolation("u is not f + tau L^s div z for the given z")
    const = hs_norm(cache, f) ** 2 / (2.0 * params.tau)
    return primal_energy(u, f, params, cache) + dual_energy(z, f, params, cache) - const


def dual_step(z, f, params: SolverParams, cache: SpectralCache) -> np.ndarray:
    """One projected descent step ``P_Z(z - lam * grad(f + tau L^s div z))``."""
    _check_cache(params, cache)
    z = cache.grid.check(z, "z")
    f = cache.grid.check(f, "f")
    lam = params.resolve_lambda(cache)
    h = cache.grid.h
    q = f + params.tau * apply_frac_power(cache, div(z, h))
    znew = project_ball(z - lam * grad(q, h))
    if not np.all(np.isfinite(znew)):
        raise DivergenceError(_divergence_message(params, cache, lam))
    return znew


def _divergence_message(params, cache, lam):
    bound = stability_max_lambda(params.s, params.tau, cache)
    return (
        f"dual iteration produced non-finite values (lambda={lam:g}); "
        f"stability requires mu_max^(s+1)*lambda*tau < 2, i.e. lambda < {bound:.6g}"
    )


class RunningAverage:
    """Weighted average ``sum alpha_k w^k`` with ``alpha_k = beta_k / sum_j beta_j``.

    Kept as a running update so that only O(N) memory is used.
    """

    def __init__(self, p: float = 1.0):
        self.p = p
        self.count = 0
        self.weight_sum = 0.0
        self.value = None

    def weight(self, k: int) -> float:
        return (k + 1.0) ** -self.p

    def update(self, w):
        w = np.asarray(w, dtype=float)
        beta = self.weight(self.count)
        self.weight_sum += beta
        if self.value is None:
            self.value = w.copy()
        else:
            self.value += (beta / self.weight_sum) * (w - self.value)
        self.count += 1
        return self.value


def ergodic_average(iterates, weights=None, p: float = 1.0) -> np.ndarray:
    """Convex combination of `iterates` with weights proportional to `weights`.

    If `weights` is omitted, ``beta_k = (k+1)^-p`` is used.  Iterates are
    consumed one at a time, so a generator avoids storing the history.
    """
    if weights is None:
        avg = RunningAverage(p)
        for w in iterates:
            avg.update(w)
        if avg.value is None:
            raise ValueError("no iterates to average")
        return avg.value
    total = 0.0
    value = None
    for w, beta in zip(iterates, weights, strict=True):
        if not beta > 0:
            raise ValueError(f"averaging weights must be positive, got {beta!r}")
        w = np.asarray(w, dtype=float)
        total += beta
        value = w.copy() if value is None else value + (beta / total) * (w - value)
    if value is None:
        raise ValueError("no iterates to average")
    return value


@dataclass
class ProxSolver:
    """Dual solver for the implicit step, bound to a cache and parameters.

    Validates the step size once at construction.  An instance is not
    thread-safe; create one per thread.
    """

    params: SolverParams
    cache: SpectralCache
    backend: str | None = None
    lam: float = field(init=False)

    def __post_init__(self):
        _check_cache(self.params, self.cache)
        self.lam = self.params.resolve_lambda(self.cache)
        self._run = kernels.get_backend(self.backend)
        n = self.cache.N
        h = self.cache.grid.h
        e0 = np.zeros(n)
        e0[0] = 1.0
        self._column = np.ascontiguousarray(
            self.params.tau * apply_frac_power(self.cache, div(e0, h))
        )
        self._multiplier = np.ascontiguousarray(
            self.params.tau * self.cache.mu_pow_s[: n // 2 + 1]
        )

    def solve(self, f, z0=None, record_history: bool = True) -> ProxResult:
        """Minimise the implicit-step functional for data `f`.

        Parameters
        ----------
        f : array_like
            Data, length N.
        z0 : array_like, optional
            Warm start for the dual variable (projected onto ``Z``); zero by
            default.
        record_history : bool
            Keep per-iteration energies, gaps and increments.
        """
        p = self.params
        f = np.ascontiguousarray(self.cache.grid.check(f, "f"), dtype=float)
        if not np.all(np.isfinite(f)):
            raise ContractViolation("f has non-finite entries")
        if z0 is None:
            z = np.zeros_like(f)
        else:
            z = np.ascontiguousarray(project_ball(self.cache.grid.check(z0, "z0")))
        width = p.max_iter + 1 if record_history else 0
        hist = np.empty((4, width))
        zbar = np.empty_like(f)
        ubar = np.empty_like(f)
        u_out = np.empty_like(f)
        iterations, status = self._run(
            z, f, self._column, self._multiplier, self.cache.grid.h, self.lam,
            p.tol_z, p.tol_gap, int(p.max_iter), hist,
            p.ergodic_p if p.ergodic else 0.0, zbar, ubar, u_out,
        )
        if status < 0:
            raise DivergenceError(_divergence_message(p, self.cache, self.lam))

        v = -apply_frac_power(self.cache, div(z, self.cache.grid.h))
        u = f - p.tau * v
        h = self.cache.grid.h
        gradu = grad(u, h)
        gap = float(np.sum(np.abs(gradu) + z * gradu))
        primal = float(0.5 * np.dot(u - f, div(z, h)) + np.sum(np.abs(gradu)))

        history = None
        if record_history:
            const = hs_norm(self.cache, f) ** 2 / (2.0 * p.tau)
            hist = hist[:, : iterations + 1]
            history = IterationHistory(
                dual_energy=hist[0] + const,
                primal_energy=hist[1].copy(),
                gap=hist[2].copy(),
                increment=hist[3].copy(),
            )
        return ProxResult(
            u=u,
            z=z,
            v=v,
            iterations=int(iterations),
            converged=status > 0,
            status=STATUS_NAMES[status],
            lam=self.lam,
            gap=gap,
            primal=primal,
            history=history,
            ergodic_u=ubar if p.ergodic else None,
            ergodic_z=zbar if p.ergodic else None,
        )


def solve_prox(f, params: SolverParams, cache: SpectralCache, z0=None,
               record_history: bool = True, backend: str | None = None) -> ProxResult:
    """Solve one implicit step with a fresh :class:`ProxSolver`."""
    return ProxSolver(params, cache, backend).solve(f, z0, record_history)
