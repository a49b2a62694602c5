"""Pure-Python versions of the hot kernels.

The compiled module ``lpx._ckernels`` exports the same names with the same
semantics; ``lpx._backend`` picks one at import time.
"""

import numpy as np


def gauss_jordan_int(A, ncols):
    """Fraction-free Gauss-Jordan elimination of an integer matrix, in place.

    ``A`` is a list of row lists of Python ints.  On return the first ``rank``
    rows hold ``den`` times the reduced row-echelon form and the remaining
    rows are zero.  Returns ``(pivots, den)``.  Every division is exact.
    """
    nrows = len(A)
    prev = 1
    r = 0
    pivots = []
    for c in range(ncols):
        if r == nrows:
            break
        p = r
        while p < nrows and A[p][c] == 0:
            p += 1
        if p == nrows:
            continue
        if p != r:
            A[p], A[r] = A[r], A[p]
        prow = A[r]
        piv = prow[c]
        for i in range(nrows):
            if i == r:
                continue
            row = A[i]
            f = row[c]
            if f == 0:
                if piv != prev:
                    for j in range(ncols):
                        if row[j]:
                            row[j] = row[j] * piv // prev
                continue
            for j in range(ncols):
                row[j] = (piv * row[j] - f * prow[j]) // prev
        prev = piv
        pivots.append(c)
        r += 1
    return pivots, prev


def _gdiv(xr, xi, pr, pi, n2):
    # exact (xr + i xi) / (pr + i pi), where n2 = pr^2 + pi^2
    return (xr * pr + xi * pi) // n2, (xi * pr - xr * pi) // n2


def gauss_jordan_gauss(Ar, Ai, ncols):
    """Complex analogue of :func:`gauss_jordan_int` over the Gaussian integers.

    ``Ar`` and ``Ai`` hold the real and imaginary parts.  Returns
    ``(pivots, den_re, den_im)``.
    """
    nrows = len(Ar)
    prr, pri = 1, 0
    r = 0
    pivots = []
    for c in range(ncols):
        if r == nrows:
            break
        p = r
        while p < nrows and Ar[p][c] == 0 and Ai[p][c] == 0:
            p += 1
        if p == nrows:
            continue
        if p != r:
            Ar[p], Ar[r] = Ar[r], Ar[p]
            Ai[p], Ai[r] = Ai[r], Ai[p]
        sr, si = Ar[r], Ai[r]
        qr, qi = sr[c], si[c]
        n2 = prr * prr + pri * pri
        for i in range(nrows):
            if i == r:
                continue
            rr, ri = Ar[i], Ai[i]
            fr, fi = rr[c], ri[c]
            for j in range(ncols):
                xr, xi = rr[j], ri[j]
                yr = qr * xr - qi * xi - (fr * sr[j] - fi * si[j])
                yi = qr * xi + qi * xr - (fr * si[j] + fi * sr[j])
                rr[j], ri[j] = _gdiv(yr, yi, prr, pri, n2)
        prr, pri = qr, qi
        pivots.append(c)
        r += 1
    return pivots, prr, pri


def _coadjoint(W, c, G, V):
    # out[nu, i] = sum W[lam, mu, nu] c[i, j, k] G[mu, j] V[lam, k]
    A = np.einsum("ijk,mj,lk->lmi", c, G, V)
    return np.einsum("lmn,lmi->ni", W, A)


def rk4_quadratic(W, c, Q, b, x0, dt, steps):
    """Fixed-step RK4 for the coadjoint flow of H = x.Q.x/2 + b.x.

    ``W`` has shape (s, s, s), ``c`` (d, d, d), ``Q`` (s*d, s*d) and ``x0``
    (s*d,).  Returns ``(trajectory, bad_step)`` where ``trajectory`` has
    ``steps + 1`` rows and ``bad_step`` is -1 unless a non-finite state
    appeared, in which case rows past it are left as NaN.
    """
    s = W.shape[0]
    d = c.shape[0]
    out = np.full((steps + 1, s * d), np.nan)
    x = np.array(x0, dtype=float)
    out[0] = x

    def f(y):
        g = (Q @ y + b).reshape(s, d)
        return _coadjoint(W, c, g, y.reshape(s, d)).ravel()

    h2 = 0.5 * dt
    # overflow is detected below, so silence numpy's warnings about it
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, steps + 1):
            k1 = f(x)
            k2 = f(x + h2 * k1)
            k3 = f(x + h2 * k2)
            k4 = f(x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                return out, n
            out[n] = x
    return out, -1
