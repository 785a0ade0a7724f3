"""Periodic grids, the DFT and fractional powers of the discrete Laplacian.

The discrete Laplacian here is ``L = grad^T grad`` built from the periodic
forward difference, which is positive *semi*-definite: its kernel is the
constant vector.  Every fractional power ``L^{+s}`` / ``L^{-s}`` is taken in
the pseudo-inverse sense, i.e. the zero mode is annihilated, so the inputs
never have to be centred by the caller.

The DFT convention is unnormalised in the forward direction,

    u_hat[k] = sum_j u[j] exp(-2 pi i j k / N),

with the ``1/N`` factor on the inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, ConsistencyError

__all__ = [
    "Grid",
    "SpectralCache",
    "dft",
    "idft",
    "laplacian_eigenvalues",
    "apply_frac_power",
    "hs_inner",
    "hs_norm",
]

_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform periodic 1D lattice ``x_j = x0 + j*h``, ``0 <= j < N``.

    The period is ``N*h``.
    """

    N: int
    h: float
    x0: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ConfigurationError(f"grid needs N >= 2 points, got N={self.N!r}")
        if not (np.isfinite(self.h) and self.h > 0):
            raise ConfigurationError(f"grid spacing must be positive, got h={self.h!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "x0", float(self.x0))

    @classmethod
    def cell_centred(cls, x_min: float, x_max: float, h: float) -> "Grid":
        """Grid of cell midpoints covering ``[x_min, x_max)`` with spacing `h`.

        Raises
        ------
        ConfigurationError
            If ``(x_max - x_min)/h`` is not an integer to within ``1e-9``.
        """
        if not x_max > x_min:
            raise ConfigurationError(f"empty domain [{x_min}, {x_max}]")
        if not h > 0:
            raise ConfigurationError(f"grid spacing must be positive, got h={h!r}")
        ratio = (x_max - x_min) / h
        n = int(round(ratio))
        if abs(ratio - n) > 1e-9 * max(1.0, ratio):
            raise ConfigurationError(
                f"domain length {x_max - x_min} is not a multiple of h={h}"
            )
        return cls(n, h, x_min + 0.5 * h)

    @property
    def length(self) -> float:
        return self.N * self.h

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.N)

    def check(self, u, name: str = "u") -> np.ndarray:
        """Return `u` as a float array, raising if its length is not N."""
        arr = np.asarray(u, dtype=float)
        if arr.shape != (self.N,):
            raise ConfigurationError(
                f"{name} has shape {arr.shape}, grid expects ({self.N},)"
            )
        return arr


def dft(u, grid: Grid | None = None) -> np.ndarray:
    """Forward DFT without normalisation.

    Parameters
    ----------
    u : array_like
        Real or complex vector.
    grid : Grid, optional
        When given, the length of `u` is validated against ``grid.N``.
    """
    if grid is not None:
        u = grid.check(u)
    return np.fft.fft(np.asarray(u))


def idft(u_hat) -> np.ndarray:
    """Inverse of :func:`dft` (carries the ``1/N``); complex output."""
    return np.fft.ifft(np.asarray(u_hat))


def _real_part(values: np.ndarray, scale: float) -> np.ndarray:
    # scale is the norm of the input that produced `values`
    resid = np.max(np.abs(values.imag)) if values.size else 0.0
    if resid > _IMAG_TOL * max(scale, np.finfo(float).tiny):
        raise ConsistencyError(
            f"inverse transform left an imaginary residue {resid:.3e} "
            f"(input norm {scale:.3e})"
        )
    return np.ascontiguousarray(values.real)


def laplacian_eigenvalues(grid: Grid) -> np.ndarray:
    """Eigenvalues of ``L = grad^T grad`` on `grid`, indexed by DFT mode.

    Obtained as the DFT of the circulant first row
    ``(2, -1, 0, ..., 0, -1) / h^2``.  Round-off below ``1e-12 * max`` is
    discarded, and ``mu[0]`` is exactly zero.
    """
    row = np.zeros(grid.N)
    row[0] += 2.0
    row[1 % grid.N] -= 1.0
    row[-1] -= 1.0
    row /= grid.h**2
    # mu_j = sum_k c_k exp(+2 pi i j k / N); the row is symmetric so the sign
    # of the exponent is immaterial.
    mu_c = np.fft.fft(row)
    mu = mu_c.real.copy()
    cutoff = 1e-12 * np.max(np.abs(mu))
    if np.max(np.abs(mu_c.imag)) > cutoff:
        raise ConsistencyError("circulant Laplacian has a complex spectrum")
    mu[np.abs(mu) < cutoff] = 0.0
    mu[0] = 0.0
    if np.any(mu < 0):
        raise ConsistencyError("negative Laplacian eigenvalue")
    return mu


def _pseudo_power(mu: np.ndarray, p: float) -> np.ndarray:
    out = np.zeros_like(mu)
    nz = mu > 0
    out[nz] = mu[nz] ** p
    return out


@dataclass(frozen=True, eq=False)
class SpectralCache:
    """Laplacian spectrum on a grid with precomputed powers ``mu^{+s}``, ``mu^{-s}``.

    Immutable after construction; safe to share between threads.
    """

    grid: Grid
    s: float
    mu: np.ndarray = field(init=False, repr=False)
    mu_pow_s: np.ndarray = field(init=False, repr=False)
    mu_pow_neg_s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        s = float(self.s)
        if not (0.0 <= s <= 1.0):
            raise ConfigurationError(f"fractional index s must lie in [0, 1], got {s}")
        object.__setattr__(self, "s", s)
        mu = laplacian_eigenvalues(self.grid)
        for name, arr in (
            ("mu", mu),
            ("mu_pow_s", _pseudo_power(mu, s)),
            ("mu_pow_neg_s", _pseudo_power(mu, -s)),
        ):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def mu_max(self) -> float:
        return float(np.max(self.mu))

    def power(self, p: float) -> np.ndarray:
        """``mu^p`` with the zero mode mapped to 0 (any real `p`)."""
        if p == self.s:
            return self.mu_pow_s
        if p == -self.s:
            return self.mu_pow_neg_s
        return _pseudo_power(self.mu, p)

    @cached_property
    def frac_column(self) -> np.ndarray:
        """First column of the circulant matrix ``L^s`` (zero mode removed)."""
        col = _real_part(idft(self.mu_pow_s), 1.0)
        # the column must sum to zero exactly so that L^s preserves means
        return col - col.mean()


def apply_frac_power(cache: SpectralCache, u, sign: int = 1, s: float | None = None) -> np.ndarray:
    """Apply ``L^{+s}`` (``sign=+1``) or ``L^{-s}`` (``sign=-1``) to `u`.

    The zero mode is always removed, so the result has zero mean.  `s`
    defaults to ``cache.s``; passing another exponent reuses the cached
    eigenvalues.
    """
    u = cache.grid.check(u)
    if sign not in (1, -1):
        raise ConfigurationError(f"sign must be +1 or -1, got {sign!r}")
    p = cache.s if s is None else float(s)
    mult = cache.power(sign * p)
    out = idft(mult * dft(u))
    return _real_part(out, float(np.linalg.norm(u)))


def hs_inner(cache: SpectralCache, u, v) -> float:
    """``(u, v)_{-s} = <L^{-s} u, v>`` on the mean-zero parts of `u` and `v`."""
    u = cache.grid.check(u, "u")
    v = cache.grid.check(v, "v")
    uh = dft(u)
    vh = dft(v)
    return float(np.real(np.sum(cache.mu_pow_neg_s * uh * np.conj(vh))) / cache.N)


def hs_norm(cache: SpectralCache, u) -> float:
    """``||u||_{-s}``; zero iff `u` is constant."""
    return float(np.sqrt(max(hs_inner(cache, u, u), 0.0)))
