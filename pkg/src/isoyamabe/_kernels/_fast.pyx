# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tridiagonal kernels.

Symmetric-tridiagonal spectra via Sturm-sequence bisection plus shifted
inverse iteration, and LU-with-partial-pivoting solves for general
tridiagonal systems.  Mirrors the contract of ``_ref`` (the LAPACK-backed
fallback); ``isoyamabe._kernels`` picks one at import time.
"""

from libc.math cimport fabs, sqrt

import numpy as np

BACKEND_NAME = "cython"


cdef double _pivmin(const double[::1] off) nogil:
    cdef double m = 0.0
    cdef Py_ssize_t i
    for i in range(off.shape[0]):
        if fabs(off[i]) > m:
            m = fabs(off[i])
    return 1e-290 * (1.0 + m * m)


def sturm_count(const double[::1] diag, const double[::1] off, double x):
    """Number of eigenvalues of the symmetric tridiagonal (diag, off) < x."""
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef int count = 0
    cdef double pivmin = _pivmin(off)
    cdef double q = diag[0] - x
    if fabs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        count += 1
    for i in range(1, n):
        q = diag[i] - x - off[i - 1] * off[i - 1] / q
        if fabs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
    return count


def bisect_lowest(const double[::1] diag, const double[::1] off, int k, double reltol):
    """Lowest k eigenvalues, ascending, by bisection on the Sturm count."""
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef int j, c
    cdef double r, lo, hi, a, b, mid, tol
    lam = np.empty(k, dtype=np.float64)
    cdef double[::1] lam_v = lam

    # Gershgorin bounds
    lo = diag[0]
    hi = diag[0]
    for i in range(n):
        r = 0.0
        if i > 0:
            r += fabs(off[i - 1])
        if i < n - 1:
            r += fabs(off[i])
        if diag[i] - r < lo:
            lo = diag[i] - r
        if diag[i] + r > hi:
            hi = diag[i] + r
    lo -= 1e-12 * (1.0 + fabs(lo))
    hi += 1e-12 * (1.0 + fabs(hi))

    a = lo
    for j in range(1, k + 1):
        # the j-th smallest lies in [a, hi]; previous eigenvalue is a lower bound
        b = hi
        while True:
            tol = reltol * (fabs(a) if fabs(a) > fabs(b) else fabs(b)) + 5e-324
            if b - a <= tol:
                break
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            c = sturm_count(diag, off, mid)
            if c >= j:
                b = mid
            else:
                a = mid
        lam_v[j - 1] = 0.5 * (a + b)
        # next eigenvalue is >= this one
    return lam


cdef int _lu_tridiag(double[::1] dl, double[::1] dd, double[::1] du,
                     double[::1] du2, long[::1] ipiv, double* minpiv) nogil:
    """LU with partial pivoting for a tridiagonal matrix (dgttrf layout).

    dl: subdiagonal (n-1), dd: diagonal (n), du: superdiagonal (n-1),
    du2: second superdiagonal workspace (n-2).  Returns 0 on success.
    Overwrites in place; *minpiv receives the smallest |U_ii|.
    """
    cdef Py_ssize_t n = dd.shape[0]
    cdef Py_ssize_t i
    cdef double fact, tmp, mp
    mp = fabs(dd[0]) if n == 1 else 1e308
    for i in range(n - 2):
        du2[i] = 0.0
    for i in range(n - 1):
        if fabs(dd[i]) >= fabs(dl[i]):
            # no row swap
            ipiv[i] = i
            if dd[i] != 0.0:
                fact = dl[i] / dd[i]
                dl[i] = fact
                dd[i + 1] = dd[i + 1] - fact * du[i]
            else:
                dl[i] = 0.0
        else:
            # swap rows i, i+1
            ipiv[i] = i + 1
            fact = dd[i] / dl[i]
            dd[i] = dl[i]
            dl[i] = fact
            tmp = du[i]
            du[i] = dd[i + 1]
            dd[i + 1] = tmp - fact * dd[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -fact * du[i + 1]
        if fabs(dd[i]) < mp:
            mp = fabs(dd[i])
    if n >= 1 and fabs(dd[n - 1]) < mp:
        mp = fabs(dd[n - 1])
    if n >= 1:
        ipiv[n - 1] = n - 1
    minpiv[0] = mp
    return 0


cdef void _lu_solve(double[::1] dl, double[::1] dd, double[::1] du,
                    double[::1] du2, long[::1] ipiv, double[::1] x,
                    double pivfloor) nogil:
    """Solve using factors from _lu_tridiag, x in place.  Pivots smaller than
    pivfloor are replaced to keep inverse iteration alive at exact shifts."""
    cdef Py_ssize_t n = dd.shape[0]
    cdef Py_ssize_t i
    cdef double tmp, piv
    for i in range(n - 1):
        if ipiv[i] == i:
            x[i + 1] = x[i + 1] - dl[i] * x[i]
        else:
            tmp = x[i]
            x[i] = x[i + 1]
            x[i + 1] = tmp - dl[i] * x[i]
    for i in range(n - 1, -1, -1):
        piv = dd[i]
        if fabs(piv) < pivfloor:
            piv = pivfloor if piv >= 0.0 else -pivfloor
        tmp = x[i]
        if i < n - 1:
            tmp = tmp - du[i] * x[i + 1]
        if i < n - 2:
            tmp = tmp - du2[i] * x[i + 2]
        x[i] = tmp / piv


def tridiag_solve(dl, dd, du, b):
    """Solve the tridiagonal system with partial pivoting.

    Returns (x, min_pivot); the caller decides what counts as singular.
    """
    cdef double[::1] dl_v = np.array(dl, dtype=np.float64)
    cdef double[::1] dd_v = np.array(dd, dtype=np.float64)
    cdef double[::1] du_v = np.array(du, dtype=np.float64)
    x = np.array(b, dtype=np.float64)
    cdef double[::1] x_v = x
    cdef Py_ssize_t n = dd_v.shape[0]
    du2 = np.zeros(max(n - 2, 1), dtype=np.float64)
    ipiv = np.zeros(n, dtype=np.int64)
    cdef double[::1] du2_v = du2
    cdef long[::1] ipiv_v = ipiv
    cdef double minpiv = 0.0
    _lu_tridiag(dl_v, dd_v, du_v, du2_v, ipiv_v, &minpiv)
    _lu_solve(dl_v, dd_v, du_v, du2_v, ipiv_v, x_v, 0.0 if minpiv > 0.0 else 5e-324)
    return x, float(minpiv)


def inverse_iteration(const double[::1] diag, const double[::1] off, double lam,
                      const double[:, ::1] ortho, int maxit):
    """Eigenvector of the symmetric tridiagonal for eigenvalue estimate lam.

    ortho holds previously computed eigenvectors of the same cluster as
    columns; iterates are reorthogonalised against them.
    """
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i, m
    cdef int it, ncols = ortho.shape[1]
    cdef double nrm, dot, pivfloor

    dl = np.empty(max(n - 1, 1), dtype=np.float64)
    dd = np.empty(n, dtype=np.float64)
    du = np.empty(max(n - 1, 1), dtype=np.float64)
    du2 = np.zeros(max(n - 2, 1), dtype=np.float64)
    ipiv = np.zeros(n, dtype=np.int64)
    cdef double[::1] dl_v = dl
    cdef double[::1] dd_v = dd
    cdef double[::1] du_v = du
    cdef double[::1] du2_v = du2
    cdef long[::1] ipiv_v = ipiv
    for i in range(n - 1):
        dl_v[i] = off[i]
        du_v[i] = off[i]
    for i in range(n):
        dd_v[i] = diag[i] - lam
    cdef double minpiv = 0.0
    _lu_tridiag(dl_v, dd_v, du_v, du2_v, ipiv_v, &minpiv)

    # scale-aware floor for near-singular back substitution
    nrm = 0.0
    for i in range(n):
        if fabs(diag[i]) > nrm:
            nrm = fabs(diag[i])
    pivfloor = 2.3e-16 * (nrm + fabs(lam) + 1.0) * 1e-3

    # deterministic start vector: ones with an index-dependent ripple
    v = np.empty(n, dtype=np.float64)
    cdef double[::1] v_v = v
    cdef unsigned long long state = 0x9E3779B97F4A7C15ULL
    for i in range(n):
        state = state * 6364136223846793005ULL + 1442695040888963407ULL
        v_v[i] = 1.0 + 1e-3 * (<double> (state >> 11) / 9007199254740992.0 - 0.5)
    nrm = 0.0
    for i in range(n):
        nrm += v_v[i] * v_v[i]
    nrm = sqrt(nrm)
    for i in range(n):
        v_v[i] /= nrm

    for it in range(maxit):
        _lu_solve(dl_v, dd_v, du_v, du2_v, ipiv_v, v_v, pivfloor)
        for m in range(ncols):
            dot = 0.0
            for i in range(n):
                dot += ortho[i, m] * v_v[i]
            for i in range(n):
                v_v[i] -= dot * ortho[i, m]
        nrm = 0.0
        for i in range(n):
            nrm += v_v[i] * v_v[i]
        nrm = sqrt(nrm)
        if nrm == 0.0:
            # start vector was entirely in the ortho complement; reseed
            for i in range(n):
                v_v[i] = 1.0 if (i % 2) == 0 else -1.0
            nrm = sqrt(<double> n)
        for i in range(n):
            v_v[i] /= nrm
        if nrm > 1e12:
            break
    return v
