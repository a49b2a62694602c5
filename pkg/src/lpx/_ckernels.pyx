# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see ``_kernels_py`` for semantics)."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.math cimport isfinite

cnp.import_array()

cdef extern from *:
    """
    static inline int lpx_mul_ovf(long long a, long long b, long long *r) {
        return __builtin_mul_overflow(a, b, r);
    }
    static inline int lpx_sub_ovf(long long a, long long b, long long *r) {
        return __builtin_sub_overflow(a, b, r);
    }
    """
    int lpx_mul_ovf(long long a, long long b, long long *r) nogil
    int lpx_sub_ovf(long long a, long long b, long long *r) nogil

cdef long long _LIM = 1LL << 62
cdef long long _MINLL = -9223372036854775807LL - 1


cdef int _gj_small(long long *A, Py_ssize_t nrows, Py_ssize_t ncols,
                   Py_ssize_t *piv_out, Py_ssize_t *rank_out,
                   long long *den_out) nogil:
    # returns 1 on overflow, leaving A in an unspecified state
    cdef long long prev = 1, piv, f, t1, t2, y
    cdef Py_ssize_t r = 0, c, p, i, j
    cdef long long *prow
    cdef long long *row
    cdef long long tmp
    for c in range(ncols):
        if r == nrows:
            break
        p = r
        while p < nrows and A[p * ncols + c] == 0:
            p += 1
        if p == nrows:
            continue
        if p != r:
            for j in range(ncols):
                tmp = A[p * ncols + j]
                A[p * ncols + j] = A[r * ncols + j]
                A[r * ncols + j] = tmp
        prow = A + r * ncols
        piv = prow[c]
        for i in range(nrows):
            if i == r:
                continue
            row = A + i * ncols
            f = row[c]
            for j in range(ncols):
                if lpx_mul_ovf(piv, row[j], &t1):
                    return 1
                if lpx_mul_ovf(f, prow[j], &t2):
                    return 1
                if lpx_sub_ovf(t1, t2, &y) or y == _MINLL:
                    return 1
                row[j] = y // prev
        prev = piv
        piv_out[r] = c
        r += 1
    rank_out[0] = r
    den_out[0] = prev
    return 0


def _gj_object(list A, Py_ssize_t ncols):
    cdef Py_ssize_t nrows = len(A), r = 0, c, p, i, j
    cdef object prev = 1, piv, f
    cdef list prow, row
    pivots = []
    for c in range(ncols):
        if r == nrows:
            break
        p = r
        while p < nrows and (<list>A[p])[c] == 0:
            p += 1
        if p == nrows:
            continue
        if p != r:
            A[p], A[r] = A[r], A[p]
        prow = <list>A[r]
        piv = prow[c]
        for i in range(nrows):
            if i == r:
                continue
            row = <list>A[i]
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


def gauss_jordan_int(list A, Py_ssize_t ncols):
    """Fraction-free Gauss-Jordan over the integers; int64 path when it fits."""
    cdef Py_ssize_t nrows = len(A), i, j, rank = 0
    cdef long long den = 1
    cdef long long *buf
    cdef Py_ssize_t *piv
    cdef object v
    cdef bint small = True
    cdef int ovf
    if nrows == 0 or ncols == 0:
        return [], 1
    for i in range(nrows):
        for v in <list>A[i]:
            if v >= _LIM or v <= -_LIM:
                small = False
                break
        if not small:
            break
    if small:
        buf = <long long *>malloc(nrows * ncols * sizeof(long long))
        piv = <Py_ssize_t *>malloc(ncols * sizeof(Py_ssize_t))
        try:
            for i in range(nrows):
                for j in range(ncols):
                    buf[i * ncols + j] = (<list>A[i])[j]
            ovf = _gj_small(buf, nrows, ncols, piv, &rank, &den)
            if not ovf:
                for i in range(nrows):
                    A[i] = [buf[i * ncols + j] for j in range(ncols)]
                return [piv[i] for i in range(rank)], den
        finally:
            free(buf)
            free(piv)
    return _gj_object(A, ncols)


def gauss_jordan_gauss(list Ar, list Ai, Py_ssize_t ncols):
    """Fraction-free Gauss-Jordan over the Gaussian integers."""
    cdef Py_ssize_t nrows = len(Ar), r = 0, c, p, i, j
    cdef object prr = 1, pri = 0, qr, qi, n2, fr, fi, xr, xi, yr, yi
    cdef list sr, si, rr, ri
    pivots = []
    for c in range(ncols):
        if r == nrows:
            break
        p = r
        while p < nrows and (<list>Ar[p])[c] == 0 and (<list>Ai[p])[c] == 0:
            p += 1
        if p == nrows:
            continue
        if p != r:
            Ar[p], Ar[r] = Ar[r], Ar[p]
            Ai[p], Ai[r] = Ai[r], Ai[p]
        sr = <list>Ar[r]
        si = <list>Ai[r]
        qr = sr[c]
        qi = si[c]
        n2 = prr * prr + pri * pri
        for i in range(nrows):
            if i == r:
                continue
            rr = <list>Ar[i]
            ri = <list>Ai[i]
            fr = rr[c]
            fi = ri[c]
            for j in range(ncols):
                xr = rr[j]
                xi = ri[j]
                yr = qr * xr - qi * xi - (fr * sr[j] - fi * si[j])
                yi = qr * xi + qi * xr - (fr * si[j] + fi * sr[j])
                rr[j] = (yr * prr + yi * pri) // n2
                ri[j] = (yi * prr - yr * pri) // n2
        prr = qr
        pri = qi
        pivots.append(c)
        r += 1
    return pivots, prr, pri


cdef void _rhs(const double *W, const double *c, const double *Q,
               const double *b, const double *x, double *g, double *out,
               Py_ssize_t s, Py_ssize_t d) nogil:
    cdef Py_ssize_t N = s * d, p, q, lam, mu, nu, i, j, k
    cdef double acc, w, cij
    for p in range(N):
        acc = b[p]
        for q in range(N):
            acc += Q[p * N + q] * x[q]
        g[p] = acc
    for p in range(N):
        out[p] = 0.0
    for lam in range(s):
        for mu in range(s):
            for nu in range(s):
                w = W[(lam * s + mu) * s + nu]
                if w == 0.0:
                    continue
                for i in range(d):
                    acc = 0.0
                    for j in range(d):
                        for k in range(d):
                            cij = c[(i * d + j) * d + k]
                            if cij != 0.0:
                                acc += cij * g[mu * d + j] * x[lam * d + k]
                    out[nu * d + i] += w * acc


def rk4_quadratic(cnp.ndarray W_, cnp.ndarray c_, cnp.ndarray Q_,
                  cnp.ndarray b_, x0, double dt, Py_ssize_t steps):
    """Fixed-step RK4 for the coadjoint flow of H = x.Q.x/2 + b.x."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] W = np.ascontiguousarray(W_, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c = np.ascontiguousarray(c_, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] Q = np.ascontiguousarray(Q_, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] b = np.ascontiguousarray(b_, dtype=np.float64).ravel()
    cdef Py_ssize_t s = W_.shape[0], d = c_.shape[0], N = s * d, n, p
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.full((steps + 1, N), np.nan)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.array(x0, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] work = np.zeros((6, N))
    cdef double *px = &x[0]
    cdef double *g = &work[0, 0]
    cdef double *k1 = &work[1, 0]
    cdef double *k2 = &work[2, 0]
    cdef double *k3 = &work[3, 0]
    cdef double *k4 = &work[4, 0]
    cdef double *y = &work[5, 0]
    cdef double h2 = 0.5 * dt, h6 = dt / 6.0
    cdef bint ok
    for p in range(N):
        out[0, p] = px[p]
    with nogil:
        for n in range(1, steps + 1):
            _rhs(&W[0], &c[0], &Q[0], &b[0], px, g, k1, s, d)
            for p in range(N):
                y[p] = px[p] + h2 * k1[p]
            _rhs(&W[0], &c[0], &Q[0], &b[0], y, g, k2, s, d)
            for p in range(N):
                y[p] = px[p] + h2 * k2[p]
            _rhs(&W[0], &c[0], &Q[0], &b[0], y, g, k3, s, d)
            for p in range(N):
                y[p] = px[p] + dt * k3[p]
            _rhs(&W[0], &c[0], &Q[0], &b[0], y, g, k4, s, d)
            ok = True
            for p in range(N):
                px[p] = px[p] + h6 * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p])
                if not isfinite(px[p]):
                    ok = False
            if not ok:
                with gil:
                    return out, n
            for p in range(N):
                out[n, p] = px[p]
    return out, -1
