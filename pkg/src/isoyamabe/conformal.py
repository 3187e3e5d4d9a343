"""Conformal transforms constant along the level sets.

For a positive factor u ∈ S_f the metric h = u^{p-2} g stays in the reduced
class: with φ = ψ∘f = u^{p-2},

    b_h = φ^{-1} b
    a_h = -((n-2) ψ'/(2 φ²)) b + φ^{-1} a
    s_h = u^{1-p} (a_n Δu + s u)          (reduced Laplacian Δu = -u'' b + u' a)
    v_h = φ^{(n-1)/2} v                   (lengths scale by √φ)

together with the covariance L_h(v) = u^{1-p} L_g(u v) and the invariance of
λ_k vol^{2/n} under constant factors.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from . import exprlang
from .discretize import DiscreteOperator, apply
from .errors import ConfigurationError, ZeroFunction
from .exprlang import Bin, Neg, Num
from .profiles import ExpressionProfile, Profile, TableProfile, as_profile
from .spectral import eigs
from .system import IsoparametricSystem, integrate

__all__ = ["ConformalFactor", "conformal_system", "scalar_curvature_of",
           "covariance_check", "yamabe_functional", "yamabe_k_value"]


@dataclass(frozen=True)
class ConformalFactor:
    """Positive profile u with its exponent context: the metric is u^{p-2} g."""

    u: Profile
    p: float

    def __post_init__(self):
        lo, hi = self.u.domain
        samples = self.u.eval_array(np.linspace(lo, hi, 257))
        if np.min(samples) <= 0:
            raise ConfigurationError("conformal factor must be positive")
        if not self.p > 2:
            raise ConfigurationError("conformal exponent must exceed 2")


def _as_factor(sys: IsoparametricSystem, u) -> ConformalFactor:
    if isinstance(u, ConformalFactor):
        return u
    sys.dims.require_yamabe()
    return ConformalFactor(as_profile(u, sys.interval), sys.dims.p_n)


def conformal_system(sys: IsoparametricSystem, u) -> IsoparametricSystem:
    """Reduction data of (M, u^{p-2} g, f) for a positive factor u ∈ S_f."""
    factor = _as_factor(sys, u)
    sys.dims.require_yamabe()
    p = sys.dims.p_n
    n = sys.dims.n
    a_n = sys.dims.a_n
    u_prof = factor.u

    if isinstance(u_prof, ExpressionProfile) and all(
            isinstance(prof, ExpressionProfile)
            for prof in (sys.b, sys.a, sys.s, sys.fibervol)):
        ue = u_prof.expr
        phi = Bin("^", ue, Num(p - 2.0))
        psi_prime = exprlang.differentiate(phi)
        b_h = Bin("/", sys.b.expr, phi)
        a_h = Bin("-", Bin("/", sys.a.expr, phi),
                  Bin("*", Num((n - 2) / 2.0),
                      Bin("/", Bin("*", psi_prime, sys.b.expr),
                          Bin("^", phi, Num(2.0)))))
        du = exprlang.differentiate(ue)
        ddu = exprlang.differentiate(du)
        lap_u = Bin("+", Neg(Bin("*", ddu, sys.b.expr)),
                    Bin("*", du, sys.a.expr))
        s_h = Bin("*", Bin("^", ue, Num(1.0 - p)),
                  Bin("+", Bin("*", Num(a_n), lap_u),
                      Bin("*", sys.s.expr, ue)))
        v_h = Bin("*", Bin("^", ue, Num((p - 2.0) * (n - 1) / 2.0)),
                  sys.fibervol.expr)
        dom = sys.interval
        return replace(
            sys, name=f"{sys.name}~conf",
            b=ExpressionProfile(b_h, dom), a=ExpressionProfile(a_h, dom),
            s=ExpressionProfile(s_h, dom), fibervol=ExpressionProfile(v_h, dom))

    # sampled path: dense tables, derivatives through the profiles themselves
    grid = np.linspace(sys.t_min, sys.t_max, 2049)
    u_v = u_prof.eval_array(grid)
    du_v = u_prof.derivative().eval_array(grid)
    ddu_v = u_prof.derivative().derivative().eval_array(grid)
    b_v = sys.b.eval_array(grid)
    a_v = sys.a.eval_array(grid)
    s_v = sys.s.eval_array(grid)
    vol_v = sys.fibervol.eval_array(grid)
    phi_v = u_v ** (p - 2.0)
    psi_prime_v = (p - 2.0) * u_v ** (p - 3.0) * du_v
    b_h_v = b_v / phi_v
    a_h_v = a_v / phi_v - (n - 2) / 2.0 * psi_prime_v * b_v / phi_v**2
    lap_u_v = -ddu_v * b_v + du_v * a_v
    s_h_v = u_v ** (1.0 - p) * (a_n * lap_u_v + s_v * u_v)
    v_h_v = phi_v ** ((n - 1) / 2.0) * vol_v
    return replace(
        sys, name=f"{sys.name}~conf",
        b=TableProfile(grid, b_h_v), a=TableProfile(grid, a_h_v),
        s=TableProfile(grid, s_h_v), fibervol=TableProfile(grid, v_h_v))


def scalar_curvature_of(sys: IsoparametricSystem, op: DiscreteOperator,
                        u) -> np.ndarray:
    """Scalar curvature of u^{p-2} g on the grid: u^{1-p} (L u)."""
    sys.dims.require_yamabe()
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ConfigurationError("conformal factor must be positive on the grid")
    return u ** (1.0 - sys.dims.p_n) * apply(op, u)


def covariance_check(op: DiscreteOperator, op_h: DiscreteOperator,
                     u, v, collar: float = 0.05) -> float:
    """Max-norm defect of L_h v = u^{1-p} L_g(u v) over interior nodes.

    u, v live on op's grid; values are carried to op_h's grid by cubic
    interpolation through the shared t coordinate, so the contract is
    O(h²) plus interpolation error for smooth data.  "Interior" excludes a
    collar (default 5% of the arclength at each end): inside the collar the
    truncation constants of the degenerate-endpoint cells are unbounded and
    no pointwise order holds there.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u <= 0):
        raise ConfigurationError("conformal factor must be positive on the grid")
    p = op.dims.p_n
    t_g = op.t_nodes()
    t_h = op_h.t_nodes()
    rhs_g = u ** (1.0 - p) * apply(op, u * v)
    rhs_h = CubicSpline(t_g, rhs_g, bc_type="not-a-knot")(t_h)
    v_h = CubicSpline(t_g, v, bc_type="not-a-knot")(t_h)
    lhs_h = apply(op_h, np.asarray(v_h, dtype=float))
    r_h = op_h.grid.nodes()
    length = op_h.grid.length
    inside = (t_h >= t_g[0]) & (t_h <= t_g[-1]) \
        & (r_h >= collar * length) & (r_h <= (1.0 - collar) * length)
    if not np.any(inside):
        raise ConfigurationError("grids do not overlap enough to compare")
    return float(np.max(np.abs(lhs_h[inside] - rhs_h[inside])))


def yamabe_functional(sys: IsoparametricSystem, op: DiscreteOperator, u,
                      s_exp: float) -> float:
    """Rayleigh-type quotient ⟨L u, u⟩_mass / ‖u‖_{s_exp}², the functional
    whose critical points solve the constant-curvature equation at s_exp."""
    u = np.asarray(u, dtype=float)
    if not np.any(u != 0):
        raise ZeroFunction("functional undefined on the zero function")
    num = float(np.sum(op.mass * u * apply(op, u)))
    den = float(np.sum(op.mass * np.abs(u) ** s_exp)) ** (2.0 / s_exp)
    return num / den


def yamabe_k_value(sys: IsoparametricSystem, op: DiscreteOperator,
                   k: int) -> float:
    """λ_k vol^{2/n} at the background metric: an upper bound for the
    infimum over the reduced conformal class."""
    if k < 1:
        raise ConfigurationError("need k >= 1")
    lam = eigs(op, k).eigenvalues[k - 1]
    vol = integrate(sys, 1.0)
    return float(lam) * vol ** (2.0 / sys.dims.n)
