"""Backend selection for the tridiagonal kernels.

Two interchangeable implementations:

* ``cython`` — hand-written Sturm bisection + inverse iteration and pivoted
  solves compiled from ``_fast.pyx`` (preferred when the extension built);
* ``lapack`` — scipy/LAPACK fallback (``_ref``).

``ISOYAMABE_BACKEND=cython|lapack`` forces one; the default is cython when
available.  Each backend object exposes::

    name: str
    lowest_eigenpairs(diag, off, k) -> (lam, Z)
    tridiag_solve(dl, dd, du, b)    -> (x, min_pivot)
    sturm_count(diag, off, x)       -> int
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _ref

_EIG_RELTOL = 5e-15
_CLUSTER_RTOL = 1e-12


@dataclass(frozen=True)
class Backend:
    name: str
    lowest_eigenpairs: Callable
    tridiag_solve: Callable
    sturm_count: Callable


def _cython_lowest_eigenpairs(diag, off, k):
    """Bisection for the lowest k eigenvalues, inverse iteration for the
    vectors, with reorthogonalisation inside numerically multiple clusters."""
    from . import _fast

    diag = np.ascontiguousarray(diag, dtype=np.float64)
    off = np.ascontiguousarray(off, dtype=np.float64)
    n = diag.size
    lam = np.asarray(_fast.bisect_lowest(diag, off, int(k), _EIG_RELTOL))
    z = np.empty((n, k), dtype=np.float64)
    cluster_start = 0
    for j in range(k):
        if j > 0 and lam[j] - lam[j - 1] > _CLUSTER_RTOL * (1.0 + abs(lam[j])):
            cluster_start = j
        ortho = np.ascontiguousarray(z[:, cluster_start:j])
        if ortho.size == 0:
            ortho = np.zeros((n, 0), dtype=np.float64)
        v = _fast.inverse_iteration(diag, off, float(lam[j]), ortho, 4)
        z[:, j] = v
    return lam, z


def _load_cython_backend():
    from . import _fast

    return Backend(
        name=_fast.BACKEND_NAME,
        lowest_eigenpairs=_cython_lowest_eigenpairs,
        tridiag_solve=_fast.tridiag_solve,
        sturm_count=_fast.sturm_count,
    )


_LAPACK_BACKEND = Backend(
    name=_ref.BACKEND_NAME,
    lowest_eigenpairs=_ref.lowest_eigenpairs,
    tridiag_solve=_ref.tridiag_solve,
    sturm_count=_ref.sturm_count,
)


def get_backend(name: str | None = None) -> Backend:
    """Return a kernel backend by name ('cython' | 'lapack'), or the default."""
    if name is None:
        name = os.environ.get("ISOYAMABE_BACKEND", "auto")
    if name == "lapack":
        return _LAPACK_BACKEND
    if name == "cython":
        return _load_cython_backend()
    if name == "auto":
        try:
            return _load_cython_backend()
        except ImportError:
            return _LAPACK_BACKEND
    raise ValueError(f"unknown backend {name!r} (expected 'cython' or 'lapack')")


BACKEND = get_backend()


def available_backends() -> list[str]:
    names = []
    try:
        _load_cython_backend()
        names.append("cython")
    except ImportError:
        pass
    names.append("lapack")
    return names
