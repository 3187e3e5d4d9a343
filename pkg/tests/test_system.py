import math

import numpy as np
import pytest
from scipy.integrate import quad

import isoyamabe.system as sy
from isoyamabe.errors import ConfigurationError, DivergentArclength
from isoyamabe.profiles import ExpressionProfile, TableProfile


def identity_residual(sys_obj, t):
    b = sys_obj.b(t)
    bp = sys_obj.b.derivative()(t)
    v = sys_obj.fibervol(t)
    vp = sys_obj.fibervol.derivative()(t)
    return abs(sys_obj.a(t) + 0.5 * bp + b * vp / v)


def test_dimension_constants():
    for n in range(3, 30):
        d = sy.DimensionConstants.for_dimension(n)
        assert d.a_n > 4 and d.p_n > 2
        # the product collapses to 16(n-1)/(n-2)^2
        assert d.a_n * (d.p_n - 2) == pytest.approx(16 * (n - 1) / (n - 2) ** 2, rel=1e-14)
    d2 = sy.DimensionConstants.for_dimension(2)
    assert math.isinf(d2.a_n) and math.isinf(d2.p_n)
    with pytest.raises(ConfigurationError):
        d2.require_yamabe()
    with pytest.raises(ConfigurationError):
        sy.DimensionConstants.for_dimension(1)


def test_unit_sphere_volumes():
    assert sy.unit_sphere_volume(0) == pytest.approx(2.0)
    assert sy.unit_sphere_volume(1) == pytest.approx(2 * math.pi)
    assert sy.unit_sphere_volume(2) == pytest.approx(4 * math.pi)
    assert sy.unit_sphere_volume(3) == pytest.approx(2 * math.pi**2)


class TestSphereLinear:
    def test_stated_formulas(self, sphere3):
        assert sphere3.b(0.0) == 1.0
        assert sphere3.a(0.5) == 1.5
        assert sphere3.s(0.37) == 6.0
        assert sphere3.kf == 0
        assert sphere3.focal_codim_minus == sphere3.focal_codim_plus == 3

    def test_divergence_identity_pointwise(self, sphere3):
        assert identity_residual(sphere3, 0.3) < 1e-10

    def test_total_volume_s2(self):
        assert sy.integrate(sy.build_sphere_linear(2)) == pytest.approx(
            4 * math.pi, rel=1e-8)

    def test_rejects_low_dimension(self):
        with pytest.raises(ConfigurationError):
            sy.build_sphere_linear(1)


class TestSphereQuadratic:
    def test_stated_values(self, quad22):
        assert quad22.kf == 1
        assert quad22.s(0.1) == 12.0
        assert quad22.b(0.0) == 4.0

    def test_laplacian_coefficient(self, quad22):
        # a(t) = 10 t + 2 for m = n = 2
        assert quad22.a(0.0) == 2.0
        assert quad22.a(0.5) == 7.0
        for t in (-0.5, 0.5):
            assert identity_residual(quad22, t) < 1e-10

    def test_codimension_one_flagged(self):
        s = sy.build_sphere_quadratic(1, 1)
        report = sy.validate(s)
        assert not s.proper
        assert not report.proper
        # b vanishes at t_min although the focal codimension there is 1
        assert s.b(-1.0) == 0.0
        assert s.fibervol(-1.0) > 0.0
        failed = [c.name for c in report.checks if not c.passed]
        assert any("t_min" in name for name in failed)

    def test_volumes(self, quad22):
        assert sy.integrate(quad22) == pytest.approx(8 * math.pi**2 / 3, rel=1e-8)
        assert sy.integrate(sy.build_sphere_quadratic(2, 3)) == pytest.approx(
            math.pi**3, rel=1e-8)

    def test_rejects_small(self):
        with pytest.raises(ConfigurationError):
            sy.build_sphere_quadratic(1, 0)


class TestProduct:
    def test_s2_times_s2(self, s2xs2):
        assert s2xs2.dims.n == 4
        assert s2xs2.s(0.2) == pytest.approx(4.0)
        assert s2xs2.kf == 2
        assert sy.integrate(s2xs2) == pytest.approx(16 * math.pi**2, rel=1e-8)

    def test_identity(self, sphere3):
        assert sy.build_product(sphere3, 0.0, 1.0, 0) is sphere3

    def test_scaled_factor(self):
        tau = 0.5
        prod = sy.build_product(sy.build_sphere_linear(2), 2.0 / tau,
                                4 * math.pi * tau, 2)
        assert prod.s(0.0) == pytest.approx(2 + 2 / tau)
        assert sy.integrate(prod) == pytest.approx(16 * math.pi**2 * tau, rel=1e-8)

    def test_rejects_bad_factor(self, sphere3):
        with pytest.raises(ConfigurationError):
            sy.build_product(sphere3, 1.0, -2.0, 1)
        with pytest.raises(ConfigurationError):
            sy.build_product(sphere3, 1.0, 1.0, -1)


class TestWarpedProfile:
    def test_unwarped(self):
        prof = sy.warped_scalar_profile("1", 2.0, 2, domain=(0.0, 1.0))
        assert prof(0.3) == pytest.approx(2.0)

    def test_constant_warp(self):
        c = 1.9
        prof = sy.warped_scalar_profile(str(c), 3.0, 4, domain=(0.0, 2.0))
        assert prof(1.2) == pytest.approx(3.0 / c, rel=1e-12)

    def test_finite_difference_oracle(self):
        ell = 3.0
        s_h, n = 2.0, 3
        prof = sy.warped_scalar_profile(f"2 + sin(2*pi*t/{ell})", s_h, n,
                                        domain=(0.0, ell))

        def phi(t):
            return 2 + math.sin(2 * math.pi * t / ell)

        q = (n + 1) / 4
        h = 1e-3      # 4th-order stencil keeps truncation and roundoff ~1e-9
        for t0 in np.linspace(0.1, ell - 0.1, 9):
            psi = lambda t: phi(t) ** q
            lap = -(-psi(t0 + 2*h) + 16*psi(t0 + h) - 30*psi(t0)
                    + 16*psi(t0 - h) - psi(t0 - 2*h)) / (12 * h**2)
            expect = phi(t0) ** (-q) * (4 * n / (n + 1) * lap
                                        + s_h * phi(t0) ** ((n - 3) / 4))
            assert prof(float(t0)) == pytest.approx(expect, abs=1e-8 * (1 + abs(expect)))

    def test_sampled_warp_matches_expression(self):
        ell, s_h, n = 2.0, 1.5, 5
        src = f"1.5 + 0.5*cos(2*pi*t/{ell})"
        symbolic = sy.warped_scalar_profile(src, s_h, n, domain=(0.0, ell))
        x = np.linspace(0, ell, 801)
        table = TableProfile(x, ExpressionProfile(src, (0, ell)).eval_array(x))
        sampled = sy.warped_scalar_profile(table, s_h, n)
        mid = np.linspace(0.2, ell - 0.2, 21)
        # spline-backed second derivatives floor out around 1e-6 relative
        np.testing.assert_allclose(sampled.eval_array(mid),
                                   symbolic.eval_array(mid), rtol=1e-4)

    def test_rejects_nonpositive_and_aperiodic(self):
        with pytest.raises(ConfigurationError):
            sy.warped_scalar_profile("t - 1", 2.0, 2, domain=(0.0, 3.0))
        with pytest.raises(ConfigurationError):
            sy.warped_scalar_profile("2 + t", 2.0, 2, domain=(0.0, 1.0))


class TestValidate:
    def test_catalog_passes(self):
        for name in sy.catalog_names():
            report = sy.validate(sy.get_system(name))
            assert report.passed, str(report)
            assert report.identity_residual < 1e-9

    def test_sign_corruption_fails(self, sphere3):
        from dataclasses import replace
        bad = replace(sphere3, a=ExpressionProfile("-3*t", sphere3.interval))
        report = sy.validate(bad)
        assert not report.passed
        assert report.identity_residual > 0.1

    def test_proper_flags(self, sphere3, quad22):
        assert sy.validate(sphere3).proper
        assert sy.validate(quad22).proper
        assert not sy.validate(sy.build_sphere_quadratic(1, 1)).proper


class TestArclength:
    def test_linear_sphere_map(self, sphere3_arc):
        assert sphere3_arc.R == pytest.approx(math.pi, abs=1e-9)
        r = np.linspace(0, sphere3_arc.R, 33)
        np.testing.assert_allclose(sphere3_arc.t_of_r.eval_array(r), -np.cos(r),
                                   atol=1e-9)
        np.testing.assert_allclose(
            sphere3_arc.W.eval_array(r), 4 * math.pi * np.sin(r) ** 2, atol=1e-8)

    def test_quadratic_sphere_length(self, quad22_arc):
        assert quad22_arc.R == pytest.approx(math.pi / 2, abs=1e-9)

    def test_round_trip(self, sphere3_arc):
        rng = np.random.default_rng(7)
        ts = rng.uniform(-1, 1, 100)
        back = sphere3_arc.map.t_of_r(sphere3_arc.map.r_of_t(ts))
        assert np.max(np.abs(back - ts)) < 1e-10

    def test_volume_agreement_both_parametrizations(self, quad22, quad22_arc):
        vol_t = sy.integrate(quad22)
        vol_r, _ = quad(quad22_arc.W, 0.0, quad22_arc.R, limit=200)
        assert vol_r == pytest.approx(vol_t, rel=1e-8)

    def test_divergent_for_flat_zero(self):
        from dataclasses import replace
        bad = replace(sy.build_sphere_linear(3),
                      b=ExpressionProfile("(1 - t^2)^2", (-1, 1)))
        with pytest.raises(DivergentArclength):
            sy.to_arclength(bad)

    def test_regular_endpoint_side(self):
        # half-open data: b positive at t_max, focal only at t_min
        dom = (-1.0, 1.0)
        s = sy.IsoparametricSystem(
            name="halfcap", dims=sy.DimensionConstants.for_dimension(3),
            t_min=-1.0, t_max=1.0,
            b=ExpressionProfile("(1 + t)*(3 - t)/2", dom),
            a=ExpressionProfile("0", dom),     # not identity-consistent; unused
            s=ExpressionProfile("6", dom),
            fibervol=ExpressionProfile("(1 + t)", dom),
            kf=0, focal_codim_minus=2, focal_codim_plus=1)
        arc = sy.to_arclength(s)
        r_expect, _ = quad(lambda t: ((1 + t) * (3 - t) / 2) ** -0.5, -1, 1,
                           points=[-1.0], limit=200)
        assert arc.R == pytest.approx(r_expect, rel=1e-9)
        assert arc.t_of_r(arc.R) == pytest.approx(1.0, abs=1e-10)


class TestIntegrate:
    def test_odd_integrand_vanishes(self, sphere3):
        assert abs(sy.integrate(sphere3, "t")) < 1e-10

    def test_quadratic_moment_matches_arclength_side(self, sphere3, sphere3_arc):
        val_t = sy.integrate(sphere3, "t^2")
        assert val_t == pytest.approx(math.pi**2 / 2, rel=1e-9)
        val_r, _ = quad(lambda r: math.cos(r) ** 2 * sphere3_arc.W(r), 0.0,
                        sphere3_arc.R, limit=200)
        assert val_t == pytest.approx(val_r, rel=1e-8)


class TestSystemFiles:
    def test_round_trip_catalog(self, tmp_path):
        for name in sy.catalog_names():
            original = sy.get_system(name)
            text = sy.system_file_text(original)
            loaded = sy.parse_system_text(text, origin=name)
            ts = np.linspace(-0.99, 0.99, 50)
            for attr in ("b", "a", "s", "fibervol"):
                np.testing.assert_allclose(
                    getattr(loaded, attr).eval_array(ts),
                    getattr(original, attr).eval_array(ts), rtol=1e-12)
            assert loaded.kf == original.kf
            assert loaded.dims.n == original.dims.n

    def test_shipped_data_files(self):
        from importlib.resources import files
        data = files("isoyamabe") / "data"
        names = sorted(p.name for p in data.iterdir() if p.name.endswith(".system"))
        assert names == sorted(f"{n}.system" for n in sy.catalog_names())
        for name in sy.catalog_names():
            loaded = sy.parse_system_text((data / f"{name}.system").read_text(),
                                          origin=name)
            assert sy.validate(loaded).passed

    def test_unknown_key_rejected(self):
        text = sy.system_file_text(sy.get_system("sphere-x1-3")) + "bogus = 1\n"
        with pytest.raises(ConfigurationError, match="unknown key"):
            sy.parse_system_text(text)

    def test_missing_key_rejected(self):
        with pytest.raises(ConfigurationError, match="missing"):
            sy.parse_system_text("name = x\ndim = 3\n")

    def test_syntax_error_located(self):
        text = sy.system_file_text(sy.get_system("sphere-x1-3"))
        text = text.replace("b = 1.0 - t ^ 2.0", "b = 1.0 - (t")
        with pytest.raises(ConfigurationError, match=r":4"):
            sy.parse_system_text(text)

    def test_comments_and_blank_lines(self):
        text = "# a catalog entry\n\n" + sy.system_file_text(sy.get_system("sphere-x1-3"))
        assert sy.parse_system_text(text).name == "sphere-x1-3"
