"""Flux-form self-adjoint discretization of the reduced conformal Laplacian.

On the arclength interval [0, R] the operator is

    L u = a_n ( -u'' - (W'/W) u' ) + s u
        = -(a_n / W) (W u')' + s u,

discretized cell-centered with N cells: nodes r_j = (j+1/2) h, lumped mass
m_j = W(r_j) h, interior face fluxes a_n W(r_{j+1/2}) (u_{j+1} - u_j)/h², and
zero flux through r = 0, R.  At focal endpoints the face weight vanishes by
itself, which is exactly the natural boundary condition lim W u' = 0; at a
regular endpoint zero flux is the Neumann condition.

The matrix is similar to a symmetric tridiagonal via the mass weights; the
symmetrized diagonals are what the eigensolver kernels consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import BACKEND, Backend
from .errors import ConfigurationError, NonPositiveMass, SingularShift
from .system import ArclengthSystem, DimensionConstants

__all__ = ["Grid", "DiscreteOperator", "assemble", "apply", "solve_shifted"]

MIN_CELLS = 16
_SOLVE_RTOL = 1e-10
_PIVOT_FLOOR = 1e-300


@dataclass(frozen=True)
class Grid:
    """Cell-centered grid on [0, R]: nodes strictly inside, faces spanning."""

    n_cells: int
    length: float

    @property
    def h(self) -> float:
        return self.length / self.n_cells

    def nodes(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.h

    def faces(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.h


@dataclass(frozen=True)
class DiscreteOperator:
    """Reduced conformal Laplacian in tridiagonal form.

    diag/offdiag are the mass-symmetrized coefficients; apply() works in the
    original (function-space) form, which the symmetrized matrix is similar
    to via M^{1/2}.
    """

    dims: DimensionConstants
    grid: Grid
    diag: np.ndarray
    offdiag: np.ndarray
    mass: np.ndarray
    s_values: np.ndarray
    flux: np.ndarray = field(repr=False)       # a_n W(face)/h² at interior faces
    system: ArclengthSystem = field(repr=False)
    backend: Backend = field(repr=False, default=BACKEND)

    @property
    def n(self) -> int:
        return self.grid.n_cells

    def node_weights(self) -> np.ndarray:
        return self.mass / self.grid.h

    def function_space_diagonals(self):
        """(lower, diag, upper) of the unsymmetrized tridiagonal."""
        w = self.node_weights()
        upper = -self.flux / w[:-1]
        lower = -self.flux / w[1:]
        return lower, self.diag.copy(), upper

    def t_nodes(self) -> np.ndarray:
        return self.system.t_of_r.eval_array(self.grid.nodes())


def assemble(arc: ArclengthSystem, n_cells: int,
             backend: Backend | None = None) -> DiscreteOperator:
    """Assemble the operator on n_cells cells.  Requires n_cells >= 16 and a
    dimension with a finite Yamabe exponent."""
    if n_cells < MIN_CELLS:
        raise ConfigurationError(f"grid below minimum {MIN_CELLS}: {n_cells}")
    arc.dims.require_yamabe()
    grid = Grid(int(n_cells), arc.R)
    h = grid.h
    nodes = grid.nodes()
    w_nodes = arc.W.eval_array(nodes)
    if np.any(w_nodes <= 0):
        j = int(np.argmin(w_nodes))
        raise NonPositiveMass(
            f"level-volume density W(r) = {w_nodes[j]:.3e} <= 0 at node {j}")
    w_faces = arc.W.eval_array(grid.faces()[1:-1])
    if np.any(w_faces <= 0):
        raise NonPositiveMass("level-volume density non-positive at an interior face")
    s_values = arc.s.eval_array(nodes)

    flux = arc.dims.a_n * w_faces / h**2
    diag = np.zeros(grid.n_cells)
    diag[:-1] += flux / w_nodes[:-1]
    diag[1:] += flux / w_nodes[1:]
    diag += s_values
    offdiag = -flux / np.sqrt(w_nodes[:-1] * w_nodes[1:])

    for arr in (diag, offdiag, s_values, flux, w_nodes):
        arr.setflags(write=False)
    mass = w_nodes * h
    mass.setflags(write=False)
    return DiscreteOperator(
        dims=arc.dims, grid=grid, diag=diag, offdiag=offdiag, mass=mass,
        s_values=s_values, flux=flux, system=arc,
        backend=backend if backend is not None else BACKEND)


def apply(op: DiscreteOperator, u) -> np.ndarray:
    """Matrix-vector product in function space.

    Flux form, so constants are annihilated exactly by the second-order part
    and L(1) = s pointwise.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (op.n,):
        raise ConfigurationError(f"expected a vector of length {op.n}, got {u.shape}")
    face_flow = op.flux * np.diff(u)
    out = np.zeros(op.n)
    out[1:] += face_flow
    out[:-1] -= face_flow
    return out / op.node_weights() + op.s_values * u


def solve_shifted(op: DiscreteOperator, sigma: float, rhs) -> np.ndarray:
    """Solve (L - sigma) u = rhs by pivoted tridiagonal elimination with one
    step of iterative refinement.  Raises SingularShift when the shift sits
    on the spectrum (pivot underflow or residual contract violation)."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (op.n,):
        raise ConfigurationError(f"expected a vector of length {op.n}, got {rhs.shape}")
    lower, diag, upper = op.function_space_diagonals()
    diag -= sigma

    def solve(b):
        x, minpiv = op.backend.tridiag_solve(lower, diag, upper, b)
        if minpiv < _PIVOT_FLOOR or not np.all(np.isfinite(x)):
            raise SingularShift(f"pivot underflow at shift {sigma!r}")
        return x

    def residual(x):
        return rhs - (apply(op, x) - sigma * x)

    rhs_norm = float(np.max(np.abs(rhs)))
    if rhs_norm == 0.0:
        return np.zeros(op.n)
    x = solve(rhs)
    r = residual(x)
    x = x + solve(r)
    x_norm = float(np.max(np.abs(x)))
    if x_norm > 1e9 * rhs_norm:
        raise SingularShift(
            f"shift {sigma!r} is numerically an eigenvalue "
            f"(amplification {x_norm / rhs_norm:.3e})")
    rnorm = float(np.max(np.abs(residual(x))))
    op_scale = float(np.max(np.abs(diag)))
    op_scale += float(np.max(np.abs(upper))) + float(np.max(np.abs(lower)))
    # 1e-10 relative to rhs, but never below the backward-stable floor
    bound = max(_SOLVE_RTOL * rhs_norm, 64.0 * np.finfo(float).eps * op_scale * x_norm)
    if rnorm > bound:
        raise SingularShift(
            f"shift {sigma!r}: residual {rnorm:.3e} exceeds contract {bound:.3e}")
    return x
