import math

import numpy as np
import pytest
from scipy.linalg import eigh

import isoyamabe.discretize as dz
import isoyamabe.spectral as sp
import isoyamabe.system as sy
from isoyamabe.errors import ConfigurationError, NonPositiveMass, SingularShift
from isoyamabe.profiles import ExpressionProfile


def synthetic_arclength(length, w_src="1", s_src="0", a_n=1.0, n=3):
    """Hand-built arclength data for operator unit tests."""
    dom = (0.0, length)
    return sy.ArclengthSystem(
        dims=sy.DimensionConstants(n, a_n, 2.0 * n / (n - 2)),
        R=length,
        W=ExpressionProfile(w_src, dom),
        s=ExpressionProfile(s_src, dom),
        t_of_r=ExpressionProfile("t", dom),
        map=None,
        source=None,
    )


def test_grid_layout():
    g = dz.Grid(10, 2.0)
    assert g.h == pytest.approx(0.2)
    nodes = g.nodes()
    faces = g.faces()
    assert nodes[0] == pytest.approx(0.1) and nodes[-1] == pytest.approx(1.9)
    assert faces[0] == 0.0 and faces[-1] == pytest.approx(2.0)
    assert np.all(nodes > 0) and np.all(nodes < 2.0)


def test_minimum_grid_enforced(sphere3_arc):
    with pytest.raises(ConfigurationError, match="grid below minimum 16"):
        dz.assemble(sphere3_arc, 15)


def test_neumann_interval_eigenvalues():
    arc = synthetic_arclength(math.pi)
    op = dz.assemble(arc, 2000)
    lam = sp.eigs(op, 4).eigenvalues
    np.testing.assert_allclose(lam, [0.0, 1.0, 4.0, 9.0], atol=2e-4)


def test_constant_annihilation_exact(sphere3_op):
    out = dz.apply(sphere3_op, np.ones(sphere3_op.n))
    np.testing.assert_array_equal(out, sphere3_op.s_values)
    assert np.all(out == 6.0)


def test_first_harmonic_eigen_identity(sphere3_arc):
    # cos(r) is the first nonconstant restricted profile: L cos = 30 cos.
    # Pointwise truncation is second order away from the boundary cells
    # (the cells at the focal endpoints carry O(1) local truncation that the
    # scheme keeps out of solutions and eigenvalues).
    errs = []
    for n_cells in (1000, 2000):
        op = dz.assemble(sphere3_arc, n_cells)
        u = np.cos(op.grid.nodes())
        rel = np.abs(dz.apply(op, u) - 30.0 * u) / 30.0
        margin = n_cells // 10
        errs.append(float(np.max(rel[margin:-margin])))
    assert errs[-1] < 1e-5
    assert errs[0] / errs[-1] >= 3.5


def test_apply_shape_checks(sphere3_op):
    assert np.all(dz.apply(sphere3_op, np.zeros(sphere3_op.n)) == 0.0)
    with pytest.raises(ConfigurationError):
        dz.apply(sphere3_op, np.zeros(7))


def test_mass_self_adjointness(sphere3_op):
    rng = np.random.default_rng(3)
    m = sphere3_op.mass
    for _ in range(5):
        u = rng.standard_normal(sphere3_op.n)
        v = rng.standard_normal(sphere3_op.n)
        lu = dz.apply(sphere3_op, u)
        lv = dz.apply(sphere3_op, v)
        left = float(np.sum(m * lu * v))
        right = float(np.sum(m * u * lv))
        scale = float(np.sqrt(np.sum(m * lu**2) * np.sum(m * v**2))
                      + np.sqrt(np.sum(m * u**2) * np.sum(m * lv**2)))
        assert abs(left - right) <= 1e-12 * scale


def test_nonpositive_mass_rejected():
    arc = synthetic_arclength(1.0, w_src="t - 0.5")
    with pytest.raises(NonPositiveMass):
        dz.assemble(arc, 64)


def test_solve_shifted_constant(sphere3_op):
    u = dz.solve_shifted(sphere3_op, 0.0, np.asarray(sphere3_op.s_values))
    assert float(np.max(np.abs(u - 1.0))) < 1e-10


def test_solve_shifted_harmonic(sphere3_op):
    r = sphere3_op.grid.nodes()
    u = dz.solve_shifted(sphere3_op, 0.0, 30.0 * np.cos(r))
    assert float(np.max(np.abs(u - np.cos(r)))) < 1e-5


def test_solve_shifted_singular(sphere3_op):
    lam1 = float(sp.eigs(sphere3_op, 1).eigenvalues[0])
    with pytest.raises(SingularShift):
        dz.solve_shifted(sphere3_op, lam1, np.ones(sphere3_op.n))


def test_solve_shifted_residual_contract(sphere3_op):
    rng = np.random.default_rng(11)
    rhs = rng.standard_normal(sphere3_op.n)
    x = dz.solve_shifted(sphere3_op, 2.5, rhs)
    resid = dz.apply(sphere3_op, x) - 2.5 * x - rhs
    # well within contract for shifts away from the spectrum
    assert float(np.max(np.abs(resid))) < 1e-9 * float(np.max(np.abs(rhs))) * 100


def test_eigenvalue_convergence_order(sphere3_arc):
    # Richardson order on the third eigenvalue (70)
    lams = []
    for n_cells in (500, 1000, 2000):
        op = dz.assemble(sphere3_arc, n_cells)
        lams.append(float(sp.eigs(op, 3).eigenvalues[2]))
    order = math.log2(abs(lams[0] - lams[1]) / abs(lams[1] - lams[2]))
    assert order >= 1.8


def test_value_coordinate_cross_check(sphere3, sphere3_arc):
    """Assemble the same operator on a graded t-grid (flux form with the
    coarea density) and compare the low spectrum with the arclength form."""
    n_cells = 400
    a_n = sphere3.dims.a_n
    # Chebyshev-like faces cluster at the focal endpoints
    theta = np.linspace(0.0, math.pi, n_cells + 1)
    faces = -np.cos(theta)
    centers = 0.5 * (faces[:-1] + faces[1:])
    widths = np.diff(faces)
    dist = np.diff(centers)

    def rho(t):
        return sphere3.fibervol.eval_array(t) / np.sqrt(sphere3.b.eval_array(t))

    coef = rho(faces[1:-1]) * sphere3.b.eval_array(faces[1:-1])  # rho*b at faces
    mass = rho(centers) * widths
    s_vals = sphere3.s.eval_array(centers)
    upper = -a_n * coef / dist / mass[:-1]
    lower = -a_n * coef / dist / mass[1:]
    diag = np.zeros(n_cells)
    diag[:-1] -= upper
    diag[1:] -= lower
    diag += s_vals
    # symmetrize by the mass weights and solve densely
    sym = np.diag(diag)
    off = upper * np.sqrt(mass[:-1] / mass[1:])
    sym += np.diag(off, 1) + np.diag(off, -1)
    lam_t = np.sort(eigh(sym, eigvals_only=True))[:3]

    op = dz.assemble(sphere3_arc, 2000)
    lam_r = sp.eigs(op, 3).eigenvalues
    np.testing.assert_allclose(lam_t, lam_r, rtol=2e-3)
