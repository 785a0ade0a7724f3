"""Pure-numpy implementation of the inner dual iteration.

Used when the compiled ``_kernels`` extension is unavailable, or when the
environment variable ``HSTVFLOW_PURE_PYTHON`` is set.  ``tau L^s div`` is
applied spectrally here (real FFT of ``div z`` times ``multiplier``), which
makes this an independent route from the circulant convolution of the
compiled kernel.
"""

import numpy as np


def run_dual(z, f, column, multiplier, h, lam, tol_z, tol_gap, max_iter,
             history, ergodic_p, zbar, ubar, u_out):
    """Run up to `max_iter` projected descent steps on the dual variable.

    Parameters
    ----------
    z : ndarray
        Dual iterate, updated in place.
    f : ndarray
        Data of the implicit step.
    column : ndarray
        First column of the circulant ``tau L^s div`` (unused here).
    multiplier : ndarray
        ``tau * mu^s`` on the ``rfft`` modes, zero at the mean mode.
    h, lam : float
        Grid spacing and splitting step.
    tol_z, tol_gap : float
        Stop once ``max|z^{k+1}-z^k| < tol_z`` or
        ``gap <= tol_gap * (1 + |primal|)``.
    max_iter : int
        Cap on the number of dual steps.
    history : ndarray, shape (4, max_iter + 1) or (4, 0)
        Rows receive the dual energy (less its constant), primal energy,
        duality gap and sup-norm increment per iterate.  Width 0 disables
        recording.
    ergodic_p : float
        Weight exponent for ``beta_k = (k+1)^-p``; ``<= 0`` disables the
        running averages.
    zbar, ubar : ndarray
        Receive the weighted averages of ``z^k`` and ``u^k``.
    u_out : ndarray
        Receives ``u = f + tau L^s div z`` at the final iterate.

    Returns
    -------
    iterations : int
    status : int
        0 cap reached, 1 increment test, 2 gap test, -1 non-finite values.
    """
    n = z.shape[0]
    record = history.shape[1] > 0
    ergodic = ergodic_p > 0.0

    def state(zk):
        d = (np.roll(zk, 1) - zk) / h
        q = f + np.fft.irfft(multiplier * np.fft.rfft(d), n)
        g = (np.roll(q, -1) - q) / h
        agrad = np.abs(g)
        energy = 0.5 * np.dot(d, q + f)
        primal = 0.5 * np.dot(d, q - f) + agrad.sum()
        gap = np.sum(agrad + zk * g)
        return q, g, energy, primal, gap

    q, g, energy, primal, gap = state(z)
    if record:
        history[:, 0] = (energy, primal, gap, np.nan)
    if ergodic:
        wsum = 1.0
        zbar[:] = z
        ubar[:] = q

    k = 0
    status = 0
    while k < max_iter:
        y = z - lam * g
        znew = y / np.maximum(np.abs(y), 1.0)
        inc = np.max(np.abs(znew - z))
        z[:] = znew
        k += 1
        q, g, energy, primal, gap = state(z)
        if not (np.isfinite(energy) and np.isfinite(gap)):
            status = -1
            break
        if record:
            history[:, k] = (energy, primal, gap, inc)
        if ergodic:
            beta = (k + 1.0) ** -ergodic_p
            wsum += beta
            a = beta / wsum
            zbar += a * (z - zbar)
            ubar += a * (q - ubar)
        if gap <= tol_gap * (1.0 + abs(primal)):
            status = 2
            break
        if inc < tol_z:
            status = 1
            break

    u_out[:] = q
    return k, status
