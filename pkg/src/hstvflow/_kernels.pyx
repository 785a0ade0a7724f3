# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loop of the dual forward-backward iteration.

Mirrors :func:`hstvflow._fallback.run_dual` exactly; see there for the
argument contract.  ``tau L^s div`` is applied as a real circulant
convolution with the precomputed first column ``column``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isfinite, pow, NAN

cnp.import_array()

cdef enum:
    SPARSE_MAX = 16


cdef inline void _apply_dense(const double[::1] rev, const double[::1] z,
                              const double[::1] f, double[::1] q, Py_ssize_t n) noexcept nogil:
    # rev[m] = column[(-m) mod n] repeated twice, so row i is rev[n-i : 2n-i].
    # Four independent partial sums let the compiler vectorise without
    # reassociating a single accumulator.
    cdef Py_ssize_t i, j, m = n - n % 4
    cdef double a0, a1, a2, a3
    cdef const double* r
    cdef const double* zp = &z[0]
    for i in range(n):
        r = &rev[n - i]
        a0 = 0.0
        a1 = 0.0
        a2 = 0.0
        a3 = 0.0
        for j in range(0, m, 4):
            a0 += r[j] * zp[j]
            a1 += r[j + 1] * zp[j + 1]
            a2 += r[j + 2] * zp[j + 2]
            a3 += r[j + 3] * zp[j + 3]
        for j in range(m, n):
            a0 += r[j] * zp[j]
        q[i] = f[i] + ((a0 + a1) + (a2 + a3))


cdef inline void _apply_sparse(const long[::1] off, const double[::1] w, Py_ssize_t nt,
                               const double[::1] z, const double[::1] f,
                               double[::1] q, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, t, k
    cdef double acc
    for i in range(n):
        acc = 0.0
        for t in range(nt):
            k = i - off[t]
            if k < 0:
                k += n
            acc += w[t] * z[k]
        q[i] = f[i] + acc


cdef inline void _diagnostics(const double[::1] z, const double[::1] f, const double[::1] q,
                              double[::1] g, double inv_h, Py_ssize_t n,
                              double* energy, double* primal, double* gap) noexcept nogil:
    # energy = F(z) - |f|^2_{-s}/(2 tau) = <div z, q + f>/2
    # primal = |u - f|^2_{-s}/(2 tau) + sum|grad u| with u = q
    cdef Py_ssize_t i
    cdef double e = 0.0, p = 0.0, tvq = 0.0, gp = 0.0, dz, zprev = z[n - 1]
    for i in range(n):
        if i + 1 < n:
            g[i] = (q[i + 1] - q[i]) * inv_h
        else:
            g[i] = (q[0] - q[i]) * inv_h
        dz = (zprev - z[i]) * inv_h
        zprev = z[i]
        e += dz * (q[i] + f[i])
        p += dz * (q[i] - f[i])
        tvq += fabs(g[i])
        gp += fabs(g[i]) + z[i] * g[i]
    energy[0] = 0.5 * e
    primal[0] = 0.5 * p + tvq
    gap[0] = gp


def run_dual(double[::1] z, const double[::1] f, const double[::1] column,
             const double[::1] multiplier, double h, double lam,
             double tol_z, double tol_gap, long max_iter,
             double[:, ::1] history, double ergodic_p,
             double[::1] zbar, double[::1] ubar, double[::1] u_out):
    """Run up to `max_iter` dual steps in place on `z`; returns ``(iterations, status)``."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t i, nt = 0
    cdef long k = 0
    cdef int status = 0
    cdef bint record = history.shape[1] > 0
    cdef bint ergodic = ergodic_p > 0.0
    cdef double inv_h = 1.0 / h
    cdef double amax = 0.0, cut, energy, primal, gap, dz, inc, ynew, ay
    cdef double beta, wsum = 0.0, a
    cdef double[::1] q = u_out
    cdef double[::1] g = np.empty(n)
    cdef double[::1] rev = np.empty(2 * n)
    cdef long[::1] off = np.empty(SPARSE_MAX, dtype=np.int_)
    cdef double[::1] wt = np.empty(SPARSE_MAX)
    cdef bint sparse

    for i in range(n):
        if fabs(column[i]) > amax:
            amax = fabs(column[i])
    cut = 1e-12 * amax
    for i in range(n):
        if fabs(column[i]) > cut:
            if nt < SPARSE_MAX:
                off[nt] = i
                wt[nt] = column[i]
            nt += 1
    sparse = nt <= SPARSE_MAX
    if not sparse:
        for i in range(2 * n):
            rev[i] = column[(n - (i % n)) % n]

    with nogil:
        # state at z^0
        if sparse:
            _apply_sparse(off, wt, nt, z, f, q, n)
        else:
            _apply_dense(rev, z, f, q, n)
        _diagnostics(z, f, q, g, inv_h, n, &energy, &primal, &gap)
        if record:
            history[0, 0] = energy
            history[1, 0] = primal
            history[2, 0] = gap
            history[3, 0] = NAN
        if ergodic:
            wsum = 1.0
            for i in range(n):
                zbar[i] = z[i]
                ubar[i] = q[i]

        while k < max_iter:
            # projected descent step
            inc = 0.0
            for i in range(n):
                ynew = z[i] - lam * g[i]
                ay = fabs(ynew)
                if ay > 1.0:
                    ynew = ynew / ay
                dz = fabs(ynew - z[i])
                if dz > inc:
                    inc = dz
                z[i] = ynew
            k += 1

            if sparse:
                _apply_sparse(off, wt, nt, z, f, q, n)
            else:
                _apply_dense(rev, z, f, q, n)
            _diagnostics(z, f, q, g, inv_h, n, &energy, &primal, &gap)
            if not isfinite(energy) or not isfinite(gap):
                status = -1
                break
            if record:
                history[0, k] = energy
                history[1, k] = primal
                history[2, k] = gap
                history[3, k] = inc
            if ergodic:
                beta = pow(k + 1.0, -ergodic_p)
                wsum += beta
                a = beta / wsum
                for i in range(n):
                    zbar[i] += a * (z[i] - zbar[i])
                    ubar[i] += a * (q[i] - ubar[i])
            if gap <= tol_gap * (1.0 + fabs(primal)):
                status = 2
                break
            if inc < tol_z:
                status = 1
                break

    return k, status
