"""Toda ansatz: exact solutions, gauges, rebuilds, integrals, charts."""

import math
from fractions import Fraction

import numpy as np
import pytest

from instanton import catalog, geometry, toda
from instanton.errors import IntegrationError, SignError


def _field(name, **kw):
    return toda.toda_solution(name, **kw)


@pytest.mark.parametrize("name", ["kasner", "alh_star", "sphere_profile"])
def test_exact_solutions_solve_the_equation(name):
    f = _field(name)
    pts = toda.sample_field(f, 300, seed=0)
    assert np.abs(toda.toda_residual(f, pts)).max() < 1e-14


def test_alf_profile_is_only_approximate():
    f = _field("alf_profile", k0=1.0)
    pts = toda.sample_field(f, 100, seed=0)
    res = np.abs(toda.toda_residual(f, pts)).max()
    assert 1e-8 < res < 1e-2


def test_gauss_curvature_of_fibers():
    sphere = _field("sphere_profile")
    pts = toda.sample_field(sphere, 30, seed=1)
    assert np.abs(toda.gauss_curvature_residual(sphere, pts)).max() < 1e-12
    p = np.array([1.0, 0.2, -0.3])
    assert toda.fiber_gauss_curvature(sphere, p) == pytest.approx(1.0,
                                                                  abs=1e-10)
    flat = _field("alh_star")
    assert toda.fiber_gauss_curvature(flat, np.array([-3.0, 0.1, 0.1])) == \
        pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("name,slope", [("kasner", -6.0), ("alh_star", -12.0)])
def test_profile_is_exactly_linear(name, slope):
    data = toda.ansatz_from_toda(_field(name))
    pts = toda.sample_field(_field(name), 50, seed=2)
    rel = np.abs(data.V(pts) - slope * pts[0]) / np.abs(slope * pts[0])
    assert rel.max() < 1e-14


def test_degenerate_profile_rejected():
    with pytest.raises(SignError):
        toda.ansatz_from_toda(_field("sphere_profile"))


@pytest.mark.parametrize("name", ["kasner", "alh_star"])
def test_rebuild_matches_catalog(name):
    ref = catalog.make_metric(name)
    built = toda.build_metric(toda.named_ansatz(name),
                              orientation=ref.orientation)
    pts = geometry.sample_points(ref, 40, seed=0)
    g_b, dg_b, _ = geometry.metric_arrays(built, pts, order=1)
    g_r, dg_r, _ = geometry.metric_arrays(ref, pts, order=1)
    assert (np.abs(g_b - g_r) / (1.0 + np.abs(g_r))).max() < 1e-12
    assert (np.abs(dg_b - dg_r) / (1.0 + np.abs(dg_r))).max() < 1e-10


@pytest.mark.parametrize("name", ["kasner", "alh_star"])
def test_integrated_gauge_builds_ricci_flat_metric(name):
    ref = catalog.make_metric(name)
    data = toda.ansatz_from_toda(_field(name))   # gauge found by quadrature
    built = toda.build_metric(data, orientation=ref.orientation)
    pts = geometry.sample_points(built, 20, seed=1)
    assert geometry.ricci_frame_norm(built, pts).max() < 1e-12


@pytest.mark.parametrize("name", ["kasner", "alh_star"])
def test_compatibility_and_connection_form(name):
    data = toda.named_ansatz(name)
    pts = toda.sample_field(_field(name), 40, seed=3)
    compat, gauge = toda.compatibility_residual(data, pts)
    # the balance involves terms of size 1/xi^5 at the far edge, so the
    # rounding floor is well above machine epsilon in absolute terms
    assert np.abs(compat).max() < 1e-9
    assert np.abs(gauge).max() < 1e-11


def test_scalar_is_reciprocal_radius():
    data = toda.named_ansatz("kasner")
    pts = toda.sample_field(_field("kasner"), 40, seed=0)
    s = toda.scalar_from_ansatz(data, pts)
    assert np.abs(s - 1.0 / pts[0]).max() < 1e-6


def test_schwarzschild_in_reduced_form():
    f = toda.schwarzschild_toda(1.0)
    pts = toda.sample_field(f, 120, seed=1)
    assert np.abs(toda.toda_residual(f, pts)).max() < 1e-12
    data = toda.ansatz_from_toda(f)
    k0sq = 12.0 ** (2.0 / 3.0)
    # the profile approaches the constant k0^2 at large radius
    far = np.array([[60.0], [0.1], [0.2]])
    assert float(np.asarray(data.V(far))[0]) == pytest.approx(k0sq, rel=0.05)


def test_reduction_integrals_flat_fibers():
    levels = [-40.0, -30.0, -20.0, -10.0, -5.0, -3.0]
    ri = toda.reduction_integrals(_field("kasner"), levels)
    assert abs(ri.euler_term) < 1e-8
    assert ri.a == pytest.approx(-1.0, abs=1e-8)
    assert abs(ri.b) < 1e-8
    ri2 = toda.reduction_integrals(_field("alh_star"), levels)
    assert abs(ri2.a) < 1e-8
    assert ri2.b == pytest.approx(1.0, abs=1e-8)


def test_reduction_integrals_spherical_fibers():
    ri = toda.reduction_integrals(_field("sphere_profile"),
                                  [3.0, 5.0, 8.0, 12.0, 20.0])
    assert ri.euler_term == pytest.approx(4.0 * math.pi, abs=1e-8)
    assert abs(ri.a) < 1e-8 and abs(ri.b) < 1e-8


def test_volume_formula_against_direct_quadrature():
    levels = [-40.0, -30.0, -20.0, -10.0, -5.0, -3.0]
    ri = toda.reduction_integrals(_field("kasner"), levels)
    vol = toda.volume_between(ri, 5.0, 15.0, "circle")
    # closed form: integral of 6 rho^2 over the shell times the fiber area
    exact = 4.0 * math.pi * (15.0 ** 3 - 5.0 ** 3)
    assert vol == pytest.approx(exact, rel=1e-8)


def test_indicial_roots_exact():
    assert toda.indicial_roots(0).roots == (Fraction(-1), Fraction(-2))
    for k in range(0, 11):
        lam = -k * (k + 1)
        roots = toda.indicial_roots(lam).roots
        assert roots == (Fraction(k - 1), Fraction(-k - 2))
        for mu in roots:
            assert (mu + 2) * (mu + 1) + lam == 0


def test_indicial_roots_generic_float():
    roots = toda.indicial_roots(-0.5).roots
    for mu in roots:
        assert (mu + 2) * (mu + 1) - 0.5 == pytest.approx(0.0, abs=1e-12)


def test_asymptotic_profile_residuals():
    f = _field("alf_profile", k0=1.0)
    ru, rv = toda.alf_profile_residual(f, 1.0, [5.0, 10.0, 20.0, 40.0])
    assert ru < 1e-10 and rv < 1e-10
    st = toda.schwarzschild_toda(1.0)
    ru, rv = toda.alf_profile_residual(st, 12.0 ** (1.0 / 3.0),
                                       [10.0, 20.0, 30.0, 50.0])
    assert np.isfinite(ru) and np.isfinite(rv)


def test_compactification_chart_alf_leading_order():
    data = toda.ansatz_from_toda(_field("alf_profile", k0=1.0))
    eps = 0.1
    cc = toda.compactification_chart(data, epsilon=eps)
    assert cc.j_zeta_residual < 1e-8
    assert cc.j_x_variation < 1e-6
    assert abs(abs(cc.w(eps, 0.7)) - 1.0) < 1e-12
    mods = np.abs(cc.w(np.linspace(eps, 1e-3, 25), 0.3))
    assert np.all(np.diff(mods) < 0.0)


def test_compactification_epsilon_must_be_reachable():
    data = toda.named_ansatz("kasner")
    with pytest.raises(IntegrationError):
        toda.compactification_chart(data, epsilon=-3.0)


def test_extension_density_limit():
    f = _field("alf_profile", k0=1.5)
    data = toda.ansatz_from_toda(f)
    p = np.array([[45.0, 49.0], [0.3, -0.6], [-0.2, 0.4]])
    val = toda.extension_density(data, p)
    varpi = np.log(4.0 / (1.0 + p[1] ** 2 + p[2] ** 2) ** 2)
    assert np.abs(val / (4.0 * np.exp(-varpi)) - 1.0).max() < 0.02
