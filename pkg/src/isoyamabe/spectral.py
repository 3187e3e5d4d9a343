"""Restricted spectrum of the reduced conformal Laplacian.

Plain eigenpairs L v = λ v orthonormal in the lumped-mass inner product, and
weighted pairs L v = λ u^{p-2} v for a nonnegative weight profile u (the
pencil behind the second-constant minimization), orthonormal in the weighted
inner product.  Both reduce to a standard symmetric tridiagonal problem:
mass symmetrization for the former, an extra diagonal congruence with the
floored weight for the latter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretize import DiscreteOperator
from .errors import ConfigurationError, EigenFailure, ZeroWeight

__all__ = ["SpectralResult", "eigs", "generalized_eigs"]

_RESIDUAL_RTOL = 1e-8
_CLUSTER_RTOL = 1e-9
_WEIGHT_FLOOR_RTOL = 1e-14


@dataclass(frozen=True)
class SpectralResult:
    """Ascending eigenvalues with eigenfunctions orthonormal in the stated
    weight inner product ('mass', or the diagonal of the weight matrix)."""

    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray        # (n, k), column k belongs to eigenvalue k
    weight: str | np.ndarray

    def multiplicity_clusters(self, rtol: float = _CLUSTER_RTOL) -> list[list[int]]:
        """Indices grouped into numerically multiple clusters."""
        lam = self.eigenvalues
        groups = [[0]]
        for j in range(1, lam.size):
            if lam[j] - lam[j - 1] <= rtol * (1.0 + abs(lam[j])):
                groups[-1].append(j)
            else:
                groups.append([j])
        return groups


def _residual_check(diag, off, lam, z):
    """‖T z - λ z‖ <= 1e-8 (|λ|+1) per pair, in the symmetrized-transformed
    coordinates the solver controls (for the mass weight this equals the
    mass-norm residual of L v = λ v).  Never below the backward-stable floor
    eps ‖T‖, which weights with a large dynamic range inflate."""
    scale = float(np.max(np.abs(diag)))
    if off.size:
        scale += 2.0 * float(np.max(np.abs(off)))
    floor = 64.0 * np.finfo(float).eps * scale
    for k in range(lam.size):
        zk = z[:, k]
        r = diag * zk - lam[k] * zk
        r[:-1] += off * zk[1:]
        r[1:] += off * zk[:-1]
        rnorm = float(np.linalg.norm(r))
        if rnorm > _RESIDUAL_RTOL * (abs(lam[k]) + 1.0) + floor:
            raise EigenFailure(
                f"eigenpair {k} residual {rnorm:.3e} exceeds contract "
                f"{_RESIDUAL_RTOL:g}*(|λ|+1) + eps-floor")


def _finalize(op: DiscreteOperator, diag, off, lam, z, weight_diag, weight_label):
    """Verify the residual contract, map symmetrized eigenvectors to function
    space, fix signs."""
    _residual_check(diag, off, lam, z)
    v = z / np.sqrt(weight_diag)[:, None]
    flip = v[0, :] < 0
    v[:, flip] *= -1.0
    v.setflags(write=False)
    lam = np.array(lam, dtype=float)
    lam.setflags(write=False)
    return SpectralResult(lam, v, weight_label)


def eigs(op: DiscreteOperator, k: int) -> SpectralResult:
    """Lowest k restricted eigenpairs, mass-orthonormal, signs fixed so the
    value at the first node is >= 0."""
    if not 1 <= k <= op.n:
        raise ConfigurationError(f"need 1 <= k <= {op.n}, got {k}")
    lam, z = op.backend.lowest_eigenpairs(op.diag, op.offdiag, int(k))
    return _finalize(op, op.diag, op.offdiag, lam, z, op.mass, "mass")


def _tridiag_thomas(diag, off_lo, off_hi, rhs):
    """Small dense Thomas solve for the condensed blocks (no pivoting; the
    blocks are strongly diagonally dominant by construction)."""
    n = diag.size
    c = np.zeros(n)
    d = np.zeros(n)
    c[0] = off_hi[0] / diag[0] if n > 1 else 0.0
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - off_lo[i - 1] * c[i - 1]
        if i < n - 1:
            c[i] = off_hi[i] / denom
        d[i] = (rhs[i] - off_lo[i - 1] * d[i - 1]) / denom
    x = np.zeros(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


class _Condensation:
    """Static condensation of degenerate-weight nodes.

    Nodes whose weight sits many orders below the rest make the congruence
    transform catastrophically scaled; in the limit they are constraints
    ((L w)_j = 0, discrete harmonic extension).  Eliminate them from the
    symmetrized matrix by exact Schur complements (the λ D_jj term they drop
    is O(floor) and far below eigenvalue tolerance), solve the benign reduced
    pencil, and reconstruct the eliminated components per eigenvalue.
    """

    def __init__(self, diag, off, d_weight, mask):
        self.mask = mask
        self.keep = np.flatnonzero(~mask)
        self.n = diag.size
        self.blocks = []
        red_diag = diag.copy()
        fills = {}
        j = 0
        while j < self.n:
            if not mask[j]:
                j += 1
                continue
            a = j
            while j < self.n and mask[j]:
                j += 1
            b = j - 1
            blk = slice(a, b + 1)
            m = b - a + 1
            bd = diag[blk].copy()
            blo = off[a:b].copy()
            left = a - 1 if a > 0 else None
            right = b + 1 if b < self.n - 1 else None
            # columns of the block inverse hit by the flank couplings
            if left is not None:
                e_l = np.zeros(m)
                e_l[0] = 1.0
                y_l = _tridiag_thomas(bd, blo, blo, e_l)
                red_diag[left] -= off[left] ** 2 * y_l[0]
            if right is not None:
                e_r = np.zeros(m)
                e_r[-1] = 1.0
                y_r = _tridiag_thomas(bd, blo, blo, e_r)
                red_diag[right] -= off[b] ** 2 * y_r[-1]
            if left is not None and right is not None:
                fills[(left, right)] = -off[left] * off[b] * y_l[-1]
            self.blocks.append((a, b, diag[blk].copy(), off[a:b].copy(),
                                d_weight[blk].copy(), left, right))
        # assemble the reduced tridiagonal over kept nodes
        kd = red_diag[self.keep]
        ke = np.zeros(max(self.keep.size - 1, 0))
        pos = {node: i for i, node in enumerate(self.keep)}
        for i in range(self.keep.size - 1):
            a, b = self.keep[i], self.keep[i + 1]
            if b == a + 1:
                ke[i] = off[a]
            else:
                ke[i] = fills.get((a, b), 0.0)
        self.reduced = (kd, ke)
        self._off = off
        self._pos = pos

    def expand(self, lam, z_red):
        """Full-length symmetrized eigenvector for one reduced eigenpair."""
        z = np.zeros(self.n)
        z[self.keep] = z_red
        for a, b, bd, blo, bw, left, right in self.blocks:
            rhs = np.zeros(b - a + 1)
            if left is not None:
                rhs[0] -= self._off[left] * z[left]
            if right is not None:
                rhs[-1] -= self._off[b] * z[right]
            z[a:b + 1] = _tridiag_thomas(bd - lam * bw, blo, blo, rhs)
        return z


_CONDENSE_RTOL = 1e-8


def generalized_eigs(op: DiscreteOperator, u, p: float, k: int) -> SpectralResult:
    """Lowest k pairs of L v = λ B v with B = diag(u^{p-2} m), u >= 0.

    Entries of B are floored at 1e-14 max(B) so weights with zeros (nodal
    weights, |v₂|) stay a valid generalized metric; nodes whose weight is
    still degenerate after the floor are eliminated by static condensation
    before the congruence transform.  Eigenfunctions are B-orthonormal.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (op.n,):
        raise ConfigurationError(f"expected a vector of length {op.n}, got {u.shape}")
    if np.any(u < 0):
        raise ConfigurationError("weight must be nonnegative")
    if not np.any(u > 0):
        raise ZeroWeight("weight is identically zero")
    if not p > 2:
        raise ConfigurationError(f"need exponent p > 2, got {p}")
    if not 1 <= k <= op.n:
        raise ConfigurationError(f"need 1 <= k <= {op.n}, got {k}")

    weight = u ** (p - 2.0) * op.mass
    weight = np.maximum(weight, _WEIGHT_FLOOR_RTOL * float(np.max(weight)))
    d = weight / op.mass
    mask = d <= _CONDENSE_RTOL * float(np.max(d))
    if not np.any(mask):
        diag = op.diag / d
        offdiag = op.offdiag / np.sqrt(d[:-1] * d[1:])
        lam, z = op.backend.lowest_eigenpairs(diag, offdiag, int(k))
        return _finalize(op, diag, offdiag, lam, z, weight, weight)

    if int(np.sum(~mask)) < k:
        raise ZeroWeight("weight support too small for the requested pairs")
    cond = _Condensation(op.diag, op.offdiag, weight, mask)
    kd, ke = cond.reduced
    d_red = d[cond.keep]
    diag = kd / d_red
    offdiag = ke / np.sqrt(d_red[:-1] * d_red[1:])
    lam, z_red = op.backend.lowest_eigenpairs(diag, offdiag, int(k))
    _residual_check(diag, offdiag, lam, z_red)
    w = np.column_stack([cond.expand(lam[j], z_red[:, j] / np.sqrt(d_red))
                         for j in range(lam.size)])
    v = w / np.sqrt(op.mass)[:, None]
    norms = np.sqrt(np.sum(weight[:, None] * v * v, axis=0))
    v = v / norms
    flip = v[0, :] < 0
    v[:, flip] *= -1.0
    v.setflags(write=False)
    lam = np.array(lam, dtype=float)
    lam.setflags(write=False)
    return SpectralResult(lam, v, weight)
