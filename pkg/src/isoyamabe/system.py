"""Isoparametric systems as one-dimensional reduction data.

A system (M, g, f) with `‖∇f‖² = b∘f` and `Δf = a∘f` (positive-Laplacian
convention) is reduced to profiles of the value t on [t_min, t_max]:

    b(t)  squared gradient          a(t)  Laplacian of f
    s(t)  scalar curvature          v(t)  (n-1)-volume of the level set

Integrals over M of functions constant on level sets reduce by the coarea
formula to ∫ φ(t) v(t)/√b(t) dt; the weight has integrable 1/√-singularities
at focal endpoints where b has a simple zero, which every quadrature here
removes by the substitution t = t_end ± (|b'|/4)σ².

The arclength form lives on [0, R], R = ∫ dt/√b, with density W(r) = v(t(r)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad

from . import exprlang
from .errors import ConfigurationError, DivergentArclength
from .exprlang import Bin, Neg, Num, Var
from .profiles import (ComposedProfile, ExpressionProfile, Profile,
                       TableProfile, as_profile)

__all__ = [
    "DimensionConstants", "IsoparametricSystem", "ArclengthSystem",
    "ValidationReport", "unit_sphere_volume",
    "build_sphere_linear", "build_sphere_quadratic", "build_product",
    "warped_scalar_profile", "validate", "to_arclength", "integrate",
    "catalog_names", "get_system", "parse_system_text", "load_system",
    "system_file_text",
]

_ZERO_ENDPOINT_RTOL = 1e-12
_SLOPE_RTOL = 1e-9


@dataclass(frozen=True)
class DimensionConstants:
    """Dimension n with the conformal-Laplacian coefficient and the critical
    exponent: a_n = 4(n-1)/(n-2), p_n = 2n/(n-2).  For n = 2 both are +inf
    and every operation using them refuses the system."""

    n: int
    a_n: float
    p_n: float

    @classmethod
    def for_dimension(cls, n: int) -> "DimensionConstants":
        n = int(n)
        if n < 2:
            raise ConfigurationError(f"dimension must be >= 2, got {n}")
        if n == 2:
            return cls(2, math.inf, math.inf)
        return cls(n, 4.0 * (n - 1) / (n - 2), 2.0 * n / (n - 2))

    def require_yamabe(self):
        if not math.isfinite(self.a_n):
            raise ConfigurationError(
                f"dimension {self.n} has no Yamabe exponent; need n >= 3")


def unit_sphere_volume(k: int) -> float:
    """k-volume of the unit k-sphere, 2 π^((k+1)/2) / Γ((k+1)/2)."""
    if k < 0:
        raise ConfigurationError("sphere dimension must be >= 0")
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


@dataclass(frozen=True)
class IsoparametricSystem:
    """One-dimensional reduction data of (M, g, f).  Immutable."""

    name: str
    dims: DimensionConstants
    t_min: float
    t_max: float
    b: Profile
    a: Profile
    s: Profile
    fibervol: Profile
    kf: int
    focal_codim_minus: int
    focal_codim_plus: int
    from_product: bool = False

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise ConfigurationError("need t_min < t_max")
        if self.focal_codim_minus < 1 or self.focal_codim_plus < 1:
            raise ConfigurationError("focal codimensions must be >= 1")

    @property
    def interval(self) -> tuple[float, float]:
        return (self.t_min, self.t_max)

    @property
    def proper(self) -> bool:
        return self.focal_codim_minus >= 2 and self.focal_codim_plus >= 2


# ---------------------------------------------------------------------------
# Catalog builders
# ---------------------------------------------------------------------------

def _t():
    return Var()


def _poly1(c1: float, c0: float):
    # c1*t + c0
    return Bin("+", Bin("*", Num(float(c1)), _t()), Num(float(c0)))


def build_sphere_linear(n: int) -> IsoparametricSystem:
    """Round n-sphere foliated by a coordinate height function.

    b = 1 - t², a = n t, s = n(n-1), v = ω_{n-1} (1 - t²)^{(n-1)/2} on [-1, 1];
    the focal sets are the two poles (codimension n).
    """
    n = int(n)
    if n < 2:
        raise ConfigurationError(f"sphere dimension must be >= 2, got {n}")
    dom = (-1.0, 1.0)
    one_minus_t2 = Bin("-", Num(1.0), Bin("^", _t(), Num(2.0)))
    omega = unit_sphere_volume(n - 1)
    return IsoparametricSystem(
        name=f"sphere-x1-{n}",
        dims=DimensionConstants.for_dimension(n),
        t_min=-1.0, t_max=1.0,
        b=ExpressionProfile(one_minus_t2, dom),
        a=ExpressionProfile(Bin("*", Num(float(n)), _t()), dom),
        s=ExpressionProfile(Num(float(n * (n - 1))), dom),
        fibervol=ExpressionProfile(
            Bin("*", Num(omega), Bin("^", one_minus_t2, Num((n - 1) / 2.0))), dom),
        kf=0,
        focal_codim_minus=n,
        focal_codim_plus=n,
    )


def build_sphere_quadratic(m: int, n: int) -> IsoparametricSystem:
    """Sphere S^{m+n} foliated by a difference of coordinate squares.

    b = 4(1 - t²), a = 2(m+n+1) t + 2(n+1-m), s = (m+n)(m+n-1),
    v = ω_{m-1} ω_n ((1+t)/2)^{(m-1)/2} ((1-t)/2)^{n/2} on [-1, 1];
    regular level sets are products of two spheres.  Focal codimensions are
    m at t = -1 and n+1 at t = +1; codimension-1 components (m = 1 or n = 0)
    make the system non-proper.
    """
    m, n = int(m), int(n)
    if m < 1 or n < 0 or m + n < 2:
        raise ConfigurationError(
            f"need m >= 1, n >= 0, m + n >= 2; got m={m}, n={n}")
    dim = m + n
    dom = (-1.0, 1.0)
    one_minus_t2 = Bin("-", Num(1.0), Bin("^", _t(), Num(2.0)))
    c = unit_sphere_volume(m - 1) * unit_sphere_volume(n) \
        / 2.0 ** ((m - 1) / 2.0 + n / 2.0)
    vol = Bin("*", Bin("*", Num(c),
                       Bin("^", Bin("+", Num(1.0), _t()), Num((m - 1) / 2.0))),
              Bin("^", Bin("-", Num(1.0), _t()), Num(n / 2.0)))
    return IsoparametricSystem(
        name=f"sphere-quad-{m}-{n}",
        dims=DimensionConstants.for_dimension(dim),
        t_min=-1.0, t_max=1.0,
        b=ExpressionProfile(Bin("*", Num(4.0), one_minus_t2), dom),
        a=ExpressionProfile(_poly1(2.0 * (dim + 1), 2.0 * (n + 1 - m)), dom),
        s=ExpressionProfile(Num(float(dim * (dim - 1))), dom),
        fibervol=ExpressionProfile(vol, dom),
        kf=min(m - 1, n, dim - 1),
        focal_codim_minus=m,
        focal_codim_plus=n + 1,
    )


def build_product(base: IsoparametricSystem, s_N: float, vol_N: float,
                  dim_N: int) -> IsoparametricSystem:
    """Cross the system with a closed constant-curvature factor N.

    Scalar curvature gains the constant s_N, the level-volume profile the
    factor vol_N, dimensions and kf grow by dim_N; b, a and the interval are
    untouched.  dim_N = 0, s_N = 0, vol_N = 1 is the identity.
    """
    dim_N = int(dim_N)
    if vol_N <= 0:
        raise ConfigurationError("factor volume must be positive")
    if dim_N < 0:
        raise ConfigurationError("factor dimension must be >= 0")
    s_new = base.s if s_N == 0 else base.s.plus_const(float(s_N))
    v_new = base.fibervol if vol_N == 1 else base.fibervol.scaled(float(vol_N))
    if dim_N == 0 and s_N == 0 and vol_N == 1:
        return base
    return replace(
        base,
        name=f"product({base.name};s={s_N:g},v={vol_N:g},d={dim_N})",
        dims=DimensionConstants.for_dimension(base.dims.n + dim_N),
        s=s_new,
        fibervol=v_new,
        kf=base.kf + dim_N,
        from_product=dim_N >= 1,
    )


def warped_scalar_profile(phi, s_h: float, n: int, domain=None) -> Profile:
    """Scalar-curvature profile of the warped product (N^n x S¹, φ h + dt²)
    as a function of the circle coordinate:

        φ^{-(n+1)/4} ( (4n/(n+1)) Δ(φ^{(n+1)/4}) + s_h φ^{(n-3)/4} ),

    Δ = -d²/dt² (positive convention).  φ must be positive and close up over
    the circle.
    """
    n = int(n)
    if n < 2:
        raise ConfigurationError("warped factor dimension must be >= 2")
    if domain is None and isinstance(phi, Profile):
        domain = phi.domain
    if domain is None:
        raise ConfigurationError("need a domain for the circle coordinate")
    phi = as_profile(phi, domain)
    lo, hi = phi.domain
    samples = phi.eval_array(np.linspace(lo, hi, 512))
    if np.min(samples) <= 0:
        raise ConfigurationError("warp factor must be positive")
    scale = float(np.max(np.abs(samples)))
    if abs(phi(lo) - phi(hi)) > 1e-8 * max(1.0, scale):
        raise ConfigurationError("warp factor must be periodic over the circle")
    q = (n + 1) / 4.0
    coeff = 4.0 * n / (n + 1.0)
    if isinstance(phi, ExpressionProfile):
        psi = Bin("^", phi.expr, Num(q))
        psi_dd = exprlang.differentiate(exprlang.differentiate(psi))
        expr = Bin("*", Bin("^", phi.expr, Num(-q)),
                   Bin("+", Bin("*", Num(coeff), Neg(psi_dd)),
                       Bin("*", Num(float(s_h)), Bin("^", phi.expr, Num((n - 3) / 4.0)))))
        return ExpressionProfile(expr, phi.domain)
    x = np.linspace(lo, hi, 2048)
    phi_v = phi.eval_array(x)
    psi = TableProfile(x, phi_v ** q)
    psi_dd = psi.derivative().derivative().eval_array(x)
    vals = phi_v ** (-q) * (coeff * (-psi_dd) + s_h * phi_v ** ((n - 3) / 4.0))
    return TableProfile(x, vals)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    system_name: str
    proper: bool
    checks: tuple[CheckResult, ...]
    identity_residual: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self):
        lines = [f"validation of {self.system_name}: "
                 f"{'PASS' if self.passed else 'FAIL'} "
                 f"(proper={self.proper}, identity residual={self.identity_residual:.3e})"]
        for c in self.checks:
            lines.append(f"  [{'ok' if c.passed else 'FAIL'}] {c.name}"
                         + (f": {c.detail}" if c.detail else ""))
        return "\n".join(lines)


def _endpoint_is_zero(value: float, scale: float) -> bool:
    return abs(value) <= _ZERO_ENDPOINT_RTOL * max(scale, 1e-30)


def validate(sys: IsoparametricSystem, points: int = 1000,
             identity_tol: float = 1e-9) -> ValidationReport:
    """Consistency report: sign checks on b and v, focal-endpoint agreement,
    and the divergence identity a = -b'/2 - b v'/v on an interior grid
    (forced by ∫ Δ(ψ∘f) dv = 0 for every ψ)."""
    t0, t1 = sys.t_min, sys.t_max
    h = (t1 - t0) / points
    grid = t0 + (np.arange(points) + 0.5) * h
    checks = []

    b_vals = sys.b.eval_array(grid)
    v_vals = sys.fibervol.eval_array(grid)
    b_scale = float(np.max(np.abs(b_vals)))
    v_scale = float(np.max(np.abs(v_vals)))
    checks.append(CheckResult(
        "b positive on the open interval", bool(np.all(b_vals > 0)),
        f"min b = {float(np.min(b_vals)):.3e}"))
    checks.append(CheckResult(
        "level volume positive on the open interval", bool(np.all(v_vals > 0)),
        f"min v = {float(np.min(v_vals)):.3e}"))

    try:
        s_ends = (sys.s(t0), sys.s(t1))
        checks.append(CheckResult("scalar profile defined on the closed interval",
                                  all(math.isfinite(x) for x in s_ends)))
    except exprlang.DomainError as exc:
        checks.append(CheckResult("scalar profile defined on the closed interval",
                                  False, str(exc)))

    for label, t_end, codim in (("t_min", t0, sys.focal_codim_minus),
                                ("t_max", t1, sys.focal_codim_plus)):
        b_end = sys.b(t_end)
        v_end = sys.fibervol(t_end)
        b_zero = _endpoint_is_zero(b_end, b_scale)
        v_zero = _endpoint_is_zero(v_end, v_scale)
        focal = codim >= 2
        checks.append(CheckResult(
            f"b vanishes at {label} iff focal codimension >= 2",
            b_zero == focal, f"b({label}) = {b_end:.3e}, codim = {codim}"))
        checks.append(CheckResult(
            f"level volume vanishes at {label} iff focal codimension >= 2",
            v_zero == focal, f"v({label}) = {v_end:.3e}, codim = {codim}"))

    try:
        b_prime = sys.b.derivative().eval_array(grid)
        v_prime = sys.fibervol.derivative().eval_array(grid)
        a_vals = sys.a.eval_array(grid)
        residual = float(np.max(np.abs(a_vals + 0.5 * b_prime
                                       + b_vals * v_prime / v_vals)))
        checks.append(CheckResult(
            f"divergence identity residual < {identity_tol:g}",
            residual < identity_tol, f"max residual = {residual:.3e}"))
    except Exception as exc:  # non-differentiable or domain failure
        residual = math.inf
        checks.append(CheckResult("divergence identity evaluable", False, str(exc)))

    return ValidationReport(sys.name, sys.proper, tuple(checks), residual)


# ---------------------------------------------------------------------------
# Arclength canonicalization
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def _endpoint_slope(sys: IsoparametricSystem, at_min: bool):
    """(is_focal_zero, inward slope of b) at an endpoint.

    A simple zero of b is required for the σ-substitution to remove the
    endpoint singularity; a flatter zero means a divergent arclength.
    """
    t_end = sys.t_min if at_min else sys.t_max
    width = sys.t_max - sys.t_min
    coarse = sys.b.eval_array(np.linspace(sys.t_min, sys.t_max, 65)[1:-1])
    scale = float(np.max(np.abs(coarse)))
    b_end = sys.b(t_end)
    if abs(b_end) > _ZERO_ENDPOINT_RTOL * max(scale, 1e-30):
        if b_end < 0:
            raise DivergentArclength(f"b < 0 at {'t_min' if at_min else 't_max'}")
        return False, 0.0
    slope = sys.b.derivative()(t_end)
    slope = slope if at_min else -slope
    if slope <= _SLOPE_RTOL * scale / width:
        raise DivergentArclength(
            "b does not have a simple zero at "
            f"{'t_min' if at_min else 't_max'} (slope {slope:.3e})")
    return True, float(slope)


class _SideMap:
    """One half of the value interval in the regularising variable σ.

    Focal side: t = t_end ± (slope/4) σ², so dr/dσ = (slope/2) σ / √b is
    smooth up to σ = 0.  Regular side: σ = |t - t_end| and dr/dσ = 1/√b.
    """

    def __init__(self, sys, at_min, samples):
        self.at_min = at_min
        self.t_end = sys.t_min if at_min else sys.t_max
        t_mid = 0.5 * (sys.t_min + sys.t_max)
        self.is_focal, slope = _endpoint_slope(sys, at_min)
        self.quarter_slope = slope / 4.0
        if self.is_focal:
            self.sigma_end = math.sqrt(abs(t_mid - self.t_end) / self.quarter_slope)
        else:
            self.sigma_end = abs(t_mid - self.t_end)
        self._b = sys.b

        # cumulative arclength over a uniform σ-grid by per-panel Gauss rules
        sig = np.linspace(0.0, self.sigma_end, samples + 1)
        mid = 0.5 * (sig[:-1] + sig[1:])
        half = 0.5 * np.diff(sig)
        nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        g = self.integrand(nodes.ravel()).reshape(nodes.shape)
        panel = (g * _GL_WEIGHTS[None, :]).sum(axis=1) * half
        r = np.concatenate(([0.0], np.cumsum(panel)))
        self.length = float(r[-1])
        self.sigma_grid = sig
        self.r_grid = r
        from scipy.interpolate import CubicSpline
        self._sigma_of_r = CubicSpline(r, sig, bc_type="not-a-knot")
        self._r_of_sigma = CubicSpline(sig, r, bc_type="not-a-knot")

    def t_of_sigma(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        if self.is_focal:
            delta = self.quarter_slope * sigma ** 2
        else:
            delta = sigma
        return self.t_end + delta if self.at_min else self.t_end - delta

    def sigma_of_t(self, t):
        delta = np.abs(np.asarray(t, dtype=float) - self.t_end)
        if self.is_focal:
            return np.sqrt(delta / self.quarter_slope)
        return delta

    def integrand(self, sigma):
        """dr/dσ, smooth across the focal endpoint."""
        sigma = np.asarray(sigma, dtype=float)
        b_vals = self._b.eval_array(self.t_of_sigma(sigma))
        if np.any(b_vals <= 0):
            raise DivergentArclength("b evaluated non-positive inside the interval")
        root = np.sqrt(b_vals)
        if self.is_focal:
            return 2.0 * self.quarter_slope * sigma / root
        return 1.0 / root

    def sigma_at_r(self, r_from_end):
        return np.clip(self._sigma_of_r(np.clip(r_from_end, 0.0, self.length)),
                       0.0, self.sigma_end)

    def r_at_sigma(self, sigma):
        return np.clip(self._r_of_sigma(np.clip(sigma, 0.0, self.sigma_end)),
                       0.0, self.length)


class ArclengthMap:
    """Monotone map between the value parameter t and arclength r on [0, R]."""

    def __init__(self, sys: IsoparametricSystem, resolution: int):
        samples = max(resolution // 2, 32)
        self.left = _SideMap(sys, True, samples)
        self.right = _SideMap(sys, False, samples)
        self.R = self.left.length + self.right.length
        self.t_min, self.t_max = sys.t_min, sys.t_max
        self.t_mid = 0.5 * (sys.t_min + sys.t_max)

    def t_of_r(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(np.clip(r, 0.0, self.R))
        out = np.empty_like(r)
        left = r <= self.left.length
        if np.any(left):
            out[left] = self.left.t_of_sigma(self.left.sigma_at_r(r[left]))
        if np.any(~left):
            out[~left] = self.right.t_of_sigma(self.right.sigma_at_r(self.R - r[~left]))
        out = np.clip(out, self.t_min, self.t_max)
        return float(out[0]) if scalar else out

    def r_of_t(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(np.clip(t, self.t_min, self.t_max))
        out = np.empty_like(t)
        left = t <= self.t_mid
        if np.any(left):
            out[left] = self.left.r_at_sigma(self.left.sigma_of_t(t[left]))
        if np.any(~left):
            out[~left] = self.R - self.right.r_at_sigma(self.right.sigma_of_t(t[~left]))
        out = np.clip(out, 0.0, self.R)
        return float(out[0]) if scalar else out


class _MapProfile(Profile):
    """The map t(r) packaged as a profile on [0, R]."""

    def __init__(self, amap: ArclengthMap):
        self._map = amap
        self.domain = (0.0, amap.R)

    def __call__(self, r):
        return self._map.t_of_r(float(r))

    def eval_array(self, r):
        return self._map.t_of_r(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class ArclengthSystem:
    """Canonical arclength form: density W and scalar profile on [0, R]."""

    dims: DimensionConstants
    R: float
    W: Profile
    s: Profile
    t_of_r: Profile
    map: ArclengthMap = field(repr=False)
    source: IsoparametricSystem = field(repr=False)


def to_arclength(sys: IsoparametricSystem, resolution: int = 4000) -> ArclengthSystem:
    """Reparametrise by arclength r = ∫ dt/√b.

    Raises DivergentArclength when b lacks a simple zero at a vanishing
    endpoint.  `resolution` sets the sampling density of the internal
    monotone maps; the default leaves their error far below discretization
    error at any practical grid size.
    """
    grid = np.linspace(sys.t_min, sys.t_max, 257)[1:-1]
    if np.any(sys.b.eval_array(grid) <= 0) or np.any(sys.fibervol.eval_array(grid) <= 0):
        raise ConfigurationError(
            f"system {sys.name!r} fails sign checks; run validate() for details")
    amap = ArclengthMap(sys, resolution)
    t_profile = _MapProfile(amap)
    dom = (0.0, amap.R)
    return ArclengthSystem(
        dims=sys.dims,
        R=amap.R,
        W=ComposedProfile(sys.fibervol, t_profile, dom),
        s=ComposedProfile(sys.s, t_profile, dom),
        t_of_r=t_profile,
        map=amap,
        source=sys,
    )


# ---------------------------------------------------------------------------
# Coarea integration
# ---------------------------------------------------------------------------

def integrate(sys: IsoparametricSystem, phi=1.0) -> float:
    """∫_M φ(f) dv reduced to ∫ φ(t) v(t)/√b(t) dt with singularity-removing
    substitutions at focal endpoints."""
    phi = as_profile(phi, (sys.t_min, sys.t_max))
    v = sys.fibervol
    total = 0.0
    err = 0.0
    for at_min in (True, False):
        side = _SideMap(sys, at_min, 32)

        def f(sigma, side=side):
            t = float(np.clip(side.t_of_sigma(sigma), sys.t_min, sys.t_max))
            return side.integrand(sigma) * phi(t) * v(t)

        val, abserr = quad(f, 0.0, side.sigma_end, epsabs=1e-12, epsrel=1e-11,
                           limit=200)
        total += val
        err += abserr
    if err > max(1e-7 * abs(total), 1e-9):
        raise DivergentArclength(
            f"coarea quadrature did not converge (error estimate {err:.3e})")
    return total


# ---------------------------------------------------------------------------
# Catalog and system definition files
# ---------------------------------------------------------------------------

def _build_s2xs2():
    return replace(
        build_product(build_sphere_linear(2), 2.0, 4.0 * math.pi, 2),
        name="s2xs2")


_CATALOG = {
    "sphere-x1-2": lambda: build_sphere_linear(2),
    "sphere-x1-3": lambda: build_sphere_linear(3),
    "sphere-x1-4": lambda: build_sphere_linear(4),
    "sphere-x1-5": lambda: build_sphere_linear(5),
    "sphere-quad-2-2": lambda: build_sphere_quadratic(2, 2),
    "sphere-quad-2-3": lambda: build_sphere_quadratic(2, 3),
    "s2xs2": _build_s2xs2,
}


def catalog_names() -> list[str]:
    return list(_CATALOG)


def get_system(name: str) -> IsoparametricSystem:
    try:
        return _CATALOG[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown catalog system {name!r}; available: {', '.join(_CATALOG)}"
        ) from None


_FILE_KEYS = ("name", "dim", "interval", "b", "a", "s", "volfactor", "kf",
              "focal_codim")


def parse_system_text(text: str, origin: str = "<string>") -> IsoparametricSystem:
    """Parse the line-oriented `key = value` system definition format.

    Keys: name, dim, interval (two reals), b, a, s, volfactor (expressions
    in t), kf, focal_codim (two integers).  Unknown keys are errors; '#'
    starts a comment.
    """
    values: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{origin}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FILE_KEYS:
            raise ConfigurationError(f"{origin}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"{origin}:{lineno}: duplicate key {key!r}")
        values[key] = (value, lineno)
    missing = [k for k in _FILE_KEYS if k not in values]
    if missing:
        raise ConfigurationError(f"{origin}: missing keys: {', '.join(missing)}")

    def text_of(key):
        return values[key][0]

    def ints_of(key, count):
        value, lineno = values[key]
        parts = value.split()
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            nums = []
        if len(nums) != count:
            raise ConfigurationError(
                f"{origin}:{lineno}: {key} needs {count} integer(s)")
        return nums

    value, lineno = values["interval"]
    parts = value.split()
    try:
        interval = [float(p) for p in parts]
    except ValueError:
        interval = []
    if len(interval) != 2:
        raise ConfigurationError(f"{origin}:{lineno}: interval needs two reals")
    t_min, t_max = interval
    if not t_min < t_max:
        raise ConfigurationError(f"{origin}:{lineno}: need t_min < t_max")

    def profile_of(key):
        value, lineno = values[key]
        try:
            return ExpressionProfile(value, (t_min, t_max))
        except exprlang.ExprSyntaxError as exc:
            raise ConfigurationError(f"{origin}:{lineno}: in {key}: {exc}") from exc

    dim = ints_of("dim", 1)[0]
    kf = ints_of("kf", 1)[0]
    codim_minus, codim_plus = ints_of("focal_codim", 2)
    return IsoparametricSystem(
        name=text_of("name"),
        dims=DimensionConstants.for_dimension(dim),
        t_min=t_min, t_max=t_max,
        b=profile_of("b"), a=profile_of("a"), s=profile_of("s"),
        fibervol=profile_of("volfactor"),
        kf=kf,
        focal_codim_minus=codim_minus,
        focal_codim_plus=codim_plus,
    )


def load_system(path) -> IsoparametricSystem:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_system_text(fh.read(), origin=str(path))


def system_file_text(sys: IsoparametricSystem) -> str:
    """Serialize an expression-backed system in the definition-file format."""
    def src(profile):
        if not isinstance(profile, ExpressionProfile):
            raise ConfigurationError(
                "only expression-backed systems can be written to files")
        return profile.source

    return "\n".join([
        f"name = {sys.name}",
        f"dim = {sys.dims.n}",
        f"interval = {sys.t_min!r} {sys.t_max!r}",
        f"b = {src(sys.b)}",
        f"a = {src(sys.a)}",
        f"s = {src(sys.s)}",
        f"volfactor = {src(sys.fibervol)}",
        f"kf = {sys.kf}",
        f"focal_codim = {sys.focal_codim_minus} {sys.focal_codim_plus}",
    ]) + "\n"
