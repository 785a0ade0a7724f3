"""Independent reference computations used by the test suite.

Nothing here calls into the package's spectral or solver code: operators are
assembled as dense matrices and fractional powers come from ``eigh``.
"""

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None


def naive_dft(u):
    u = np.asarray(u, dtype=complex)
    n = len(u)
    j = np.arange(n)
    return np.array([np.sum(u * np.exp(-2j * np.pi * j * k / n)) for k in range(n)])


def grad_matrix(n, h):
    """The periodic forward-difference matrix, written out row by row."""
    G = np.zeros((n, n))
    for i in range(n):
        G[i, i] -= 1.0
        G[i, (i + 1) % n] += 1.0
    return G / h


def laplacian_matrix(n, h):
    G = grad_matrix(n, h)
    return G.T @ G


def dense_power(n, h, p):
    """``L^p`` on the mean-zero subspace (kernel mapped to 0) via ``eigh``."""
    w, V = np.linalg.eigh(laplacian_matrix(n, h))
    tol = 1e-9 * max(w.max(), 1.0)
    wp = np.zeros_like(w)
    nz = w > tol
    wp[nz] = w[nz] ** p
    return (V * wp) @ V.T


def mean_projector(n):
    return np.eye(n) - np.full((n, n), 1.0 / n)


def dense_problem(n, h, s, tau):
    G = grad_matrix(n, h)
    A = tau * dense_power(n, h, s) @ G.T  # tau L^s div
    Pinv = dense_power(n, h, -s) if s > 0 else mean_projector(n)
    return G, A, Pinv


if numba is not None:

    @numba.njit(cache=True)
    def _projected_gradient(G, A, f, lam, iters):
        n = f.shape[0]
        z = np.zeros(n)
        q = np.empty(n)
        for _ in range(iters):
            for i in range(n):
                acc = f[i]
                for j in range(n):
                    acc += A[i, j] * z[j]
                q[i] = acc
            for i in range(n):
                gi = 0.0
                for j in range(n):
                    gi += G[i, j] * q[j]
                y = z[i] - lam * gi
                ay = abs(y)
                z[i] = y / ay if ay > 1.0 else y
        for i in range(n):
            acc = f[i]
            for j in range(n):
                acc += A[i, j] * z[j]
            q[i] = acc
        return q, z


def brute_force_prox(f, h, s, tau, lam, iters=10_000_000):
    """Fixed-count projected gradient on dense matrices; returns ``(u, z)``."""
    if numba is None:  # pragma: no cover
        raise RuntimeError("numba is required for the brute-force oracle")
    n = len(f)
    G, A, _ = dense_problem(n, h, s, tau)
    return _projected_gradient(G, A, np.asarray(f, dtype=float), lam, iters)


def smoothed_prox(f, h, s, tau, eps, tol=1e-15, max_newton=500):
    """Minimise ``|u-f|_{-s}^2/(2tau) + sum sqrt((Gu)_j^2 + eps^2)`` by damped Newton.

    The mean of ``u`` is pinned to that of ``f``; the iteration runs in an
    orthonormal basis of the mean-zero subspace.
    """
    f = np.asarray(f, dtype=float)
    n = len(f)
    G, _, Pinv = dense_problem(n, h, s, tau)
    B = np.linalg.svd(mean_projector(n))[0][:, : n - 1]

    def objective(w):
        r = B @ w
        g = G @ (f + r)
        return r @ Pinv @ r / (2 * tau) + np.sum(np.sqrt(g * g + eps * eps))

    w = np.zeros(n - 1)
    for _ in range(max_newton):
        r = B @ w
        g = G @ (f + r)
        root = np.sqrt(g * g + eps * eps)
        grad = B.T @ (Pinv @ r / tau + G.T @ (g / root))
        H = B.T @ (Pinv / tau + G.T @ np.diag(eps * eps / root**3) @ G) @ B
        step = np.linalg.solve(H, grad)
        t = 1.0
        f0 = objective(w)
        while objective(w - t * step) > f0 - 1e-4 * t * (grad @ step) and t > 1e-12:
            t *= 0.5
        w = w - t * step
        if np.max(np.abs(t * step)) < tol * (1 + np.max(np.abs(w))):
            break
    return f + B @ w


def richardson_smoothed_prox(f, h, s, tau, eps=(1e-3, 1e-4)):
    """Linear extrapolation ``eps -> 0`` of :func:`smoothed_prox`."""
    e1, e2 = eps
    u1 = smoothed_prox(f, h, s, tau, e1)
    u2 = smoothed_prox(f, h, s, tau, e2)
    return (e1 * u2 - e2 * u1) / (e1 - e2)
