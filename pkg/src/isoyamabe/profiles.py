"""One-variable profiles: the functions b, a, s, v, W, psi of the reduction.

A profile is evaluable on a closed interval, scalar or vectorized, and knows
how to differentiate itself: expression-backed profiles differentiate
symbolically, sampled tables through the analytic derivative of their
not-a-knot cubic spline.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from . import exprlang
from .exprlang import Bin, Expr, Num

__all__ = ["Profile", "ExpressionProfile", "TableProfile", "ComposedProfile",
           "as_profile", "constant_profile"]


class Profile:
    """Evaluable function of one variable on a closed interval."""

    domain: tuple[float, float]

    def __call__(self, t: float) -> float:
        raise NotImplementedError

    def eval_array(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self) -> "Profile":
        raise NotImplementedError

    # algebra helpers used by product construction and conformal transforms
    def scaled(self, c: float) -> "Profile":
        raise NotImplementedError

    def plus_const(self, c: float) -> "Profile":
        raise NotImplementedError


class ExpressionProfile(Profile):
    """Profile backed by a parsed expression in t."""

    def __init__(self, expr: Expr | str, domain: tuple[float, float]):
        if isinstance(expr, str):
            expr = exprlang.parse(expr)
        self.expr = expr
        self.domain = (float(domain[0]), float(domain[1]))

    def __call__(self, t):
        return exprlang.evaluate(self.expr, float(t))

    def eval_array(self, t):
        return exprlang.evaluate(self.expr, np.asarray(t, dtype=float))

    def derivative(self):
        return ExpressionProfile(exprlang.differentiate(self.expr), self.domain)

    def scaled(self, c):
        return ExpressionProfile(Bin("*", Num(float(c)), self.expr), self.domain)

    def plus_const(self, c):
        return ExpressionProfile(Bin("+", self.expr, Num(float(c))), self.domain)

    def power(self, q):
        return ExpressionProfile(Bin("^", self.expr, Num(float(q))), self.domain)

    @property
    def source(self) -> str:
        return exprlang.to_string(self.expr)

    def __repr__(self):
        return f"ExpressionProfile({self.source!r}, domain={self.domain})"


class TableProfile(Profile):
    """Profile backed by samples on a strictly increasing abscissa, evaluated
    through a not-a-knot cubic spline.  Inputs are clipped to the domain so
    that last-ulp excursions from coordinate maps stay evaluable."""

    def __init__(self, x, y, domain=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 4:
            raise ValueError("need matching 1-d arrays with at least 4 samples")
        if not np.all(np.diff(x) > 0):
            raise ValueError("table abscissae must be strictly increasing")
        self._x = x
        self._y = y
        self._pp = CubicSpline(x, y, bc_type="not-a-knot")
        if domain is None:
            domain = (x[0], x[-1])
        self.domain = (float(domain[0]), float(domain[1]))

    def __call__(self, t):
        return float(self._pp(np.clip(t, *self.domain)))

    def eval_array(self, t):
        return np.asarray(self._pp(np.clip(np.asarray(t, dtype=float), *self.domain)),
                          dtype=float)

    def derivative(self):
        return _PPolyProfile(self._pp.derivative(), self.domain)

    def scaled(self, c):
        return TableProfile(self._x, c * self._y, self.domain)

    def plus_const(self, c):
        return TableProfile(self._x, self._y + c, self.domain)

    @property
    def samples(self):
        return self._x, self._y


class _PPolyProfile(Profile):
    """Derivative of a TableProfile (piecewise polynomial)."""

    def __init__(self, pp, domain):
        self._pp = pp
        self.domain = (float(domain[0]), float(domain[1]))

    def __call__(self, t):
        return float(self._pp(np.clip(t, *self.domain)))

    def eval_array(self, t):
        return np.asarray(self._pp(np.clip(np.asarray(t, dtype=float), *self.domain)),
                          dtype=float)

    def derivative(self):
        return _PPolyProfile(self._pp.derivative(), self.domain)


class ComposedProfile(Profile):
    """outer(inner(r)): used for arclength-parametrised views W(r) = v(t(r))."""

    def __init__(self, outer: Profile, inner: Profile, domain):
        self.outer = outer
        self.inner = inner
        self.domain = (float(domain[0]), float(domain[1]))

    def __call__(self, r):
        return self.outer(self.inner(r))

    def eval_array(self, r):
        return self.outer.eval_array(self.inner.eval_array(r))

    def scaled(self, c):
        return ComposedProfile(self.outer.scaled(c), self.inner, self.domain)

    def plus_const(self, c):
        return ComposedProfile(self.outer.plus_const(c), self.inner, self.domain)


def constant_profile(value: float, domain) -> ExpressionProfile:
    return ExpressionProfile(Num(float(value)), domain)


def as_profile(obj, domain) -> Profile:
    """Coerce an expression string, a number or a Profile to a Profile."""
    if isinstance(obj, Profile):
        return obj
    if isinstance(obj, str):
        return ExpressionProfile(obj, domain)
    if isinstance(obj, (int, float)):
        return constant_profile(float(obj), domain)
    raise TypeError(f"cannot interpret {type(obj).__name__} as a profile")
