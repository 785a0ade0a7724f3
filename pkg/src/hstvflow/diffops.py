"""Matrix-free periodic difference operators and the dual constraint projection."""

from __future__ import annotations

import numpy as np

__all__ = ["grad", "div", "tv", "tv_phys", "project_ball"]


def grad(u, h: float) -> np.ndarray:
    """Forward difference ``(u[j+1] - u[j]) / h`` with periodic wrap."""
    u = np.asarray(u, dtype=float)
    return (np.roll(u, -1) - u) / h


def div(z, h: float) -> np.ndarray:
    """Exact transpose of :func:`grad`: ``(z[j-1] - z[j]) / h``.

    Note the sign: this is ``grad^T``, so ``div(grad(u))`` is the positive
    semi-definite Laplacian.  The output always sums to zero.
    """
    z = np.asarray(z, dtype=float)
    return (np.roll(z, 1) - z) / h


def tv(u, h: float) -> float:
    """Discrete total variation ``sum_j |(grad u)_j| = sup_{|z|<=1} <u, div z>``.

    This is the functional minimised by the solver; it carries a ``1/h``
    relative to :func:`tv_phys`.
    """
    return float(np.sum(np.abs(grad(u, h))))


def tv_phys(u) -> float:
    """Total variation of the piecewise-constant interpolant, ``sum |u[j+1]-u[j]|``."""
    u = np.asarray(u, dtype=float)
    return float(np.sum(np.abs(np.roll(u, -1) - u)))


def project_ball(y) -> np.ndarray:
    """Pointwise projection onto ``{|z_j| <= 1}``: ``y / max(|y|, 1)``."""
    y = np.asarray(y, dtype=float)
    return y / np.maximum(np.abs(y), 1.0)
