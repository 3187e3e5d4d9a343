"""Fallback tridiagonal kernels on top of LAPACK (scipy).

Same contract as the compiled module ``_fast``: lowest eigenpairs of a
symmetric tridiagonal matrix and pivoted tridiagonal solves.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh_tridiagonal, get_lapack_funcs

BACKEND_NAME = "lapack"

_gtsv = get_lapack_funcs(("gtsv",), (np.empty(2, dtype=np.float64),))[0]


def sturm_count(diag, off, x):
    """Number of eigenvalues of the symmetric tridiagonal (diag, off) < x."""
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    pivmin = 1e-290 * (1.0 + float(np.max(np.abs(off), initial=0.0)) ** 2)
    q = diag[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    count = 1 if q < 0 else 0
    for i in range(1, diag.size):
        q = diag[i] - x - off[i - 1] * off[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


def lowest_eigenpairs(diag, off, k):
    """Lowest k eigenpairs of the symmetric tridiagonal (diag, off).

    Returns (lam ascending, Z with orthonormal columns).  The bisection
    tolerance is forced to the smallest positive value: stebz's default is
    eps * ||T||_1, which is far too coarse for small eigenvalues of the
    badly scaled matrices that degenerate weights produce.
    """
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    lam, z = eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1),
                              tol=5e-324)
    return np.asarray(lam, dtype=float), np.asarray(z, dtype=float)


def tridiag_solve(dl, dd, du, b):
    """Solve the tridiagonal system with partial pivoting (LAPACK gtsv).

    Returns (x, min_pivot); gtsv does not expose pivots, so min_pivot is 0.0
    on reported singularity and +inf otherwise (the caller's residual check
    covers near-singular systems).
    """
    dl = np.array(dl, dtype=np.float64)
    dd = np.array(dd, dtype=np.float64)
    du = np.array(du, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    _, _, _, x, info = _gtsv(dl, dd, du, b, overwrite_dl=1, overwrite_d=1,
                             overwrite_du=1, overwrite_b=1)
    if info != 0:
        return np.asarray(x, dtype=float).reshape(dd.shape), 0.0
    return np.asarray(x, dtype=float).reshape(dd.shape), np.inf
