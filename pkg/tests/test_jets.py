"""Truncated multivariate Taylor arithmetic: algebraic laws and accuracy."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from instanton import jets as jt
from instanton.errors import OrderExceeded

finite = st.floats(min_value=-3.0, max_value=3.0,
                   allow_nan=False, allow_infinity=False)
nonzero = st.floats(min_value=0.3, max_value=3.0).map(
    lambda v: v if v > 0 else v - 0.3)


def _vars(center, order=3):
    return jt.Jet.variables(np.asarray(center, dtype=float), order)


@given(finite, finite, finite, finite)
@settings(max_examples=60, deadline=None)
def test_product_rule(a, b, c, d):
    x, y, z, w = _vars([a, b, c, d])
    f = x * y + z.sin()
    g = w * w - y
    lhs = (f * g).partial((1, 0, 0, 0))
    rhs = (f.partial((1, 0, 0, 0)) * g.value
           + f.value * g.partial((1, 0, 0, 0)))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


@given(finite, finite, finite, finite)
@settings(max_examples=60, deadline=None)
def test_mixed_partials_commute(a, b, c, d):
    x, y, z, w = _vars([a, b, c, d])
    f = (x * y).sin() + z * w * x
    assert f.partial((1, 1, 0, 0)) == f.partial((1, 1, 0, 0))
    g = jt.exp(0.3 * x) * (y + z)
    assert g.partial((1, 0, 1, 0)) == pytest.approx(
        0.3 * np.exp(0.3 * a), rel=1e-12)


@given(nonzero, finite)
@settings(max_examples=40, deadline=None)
def test_log_exp_inverse(a, b):
    x, y, _, _ = _vars([a, b, 0.0, 0.0])
    f = x * x + 1.0 + y.cos()
    back = f.log().exp()
    for idx in ((0, 0, 0, 0), (1, 0, 0, 0), (2, 0, 0, 0), (1, 1, 0, 0)):
        assert back.partial(idx) == pytest.approx(f.partial(idx),
                                                  rel=1e-10, abs=1e-10)


@given(st.floats(min_value=-3.0, max_value=-0.3))
@settings(max_examples=30, deadline=None)
def test_division_safe_for_negative_values(a):
    x, _, _, _ = _vars([a, 0.0, 0.0, 0.0])
    r = 1.0 / x
    assert r.value == pytest.approx(1.0 / a, rel=1e-14)
    assert r.partial((1, 0, 0, 0)) == pytest.approx(-1.0 / a ** 2, rel=1e-12)


def test_series_derivative_shifts_coefficients():
    x, y, _, _ = _vars([0.7, -0.4, 0.0, 0.0], order=4)
    f = (x * y).exp()
    df = f.derivative(0)
    for idx in ((0, 0, 0, 0), (1, 0, 0, 0), (0, 2, 0, 0), (1, 1, 0, 0)):
        bumped = (idx[0] + 1,) + idx[1:]
        assert df.partial(idx) == pytest.approx(f.partial(bumped), rel=1e-12)


def test_series_derivative_truncates_top_degree():
    x, _, _, _ = _vars([0.5, 0.0, 0.0, 0.0], order=2)
    f = x * x * x
    df = f.derivative(0)
    # top-degree coefficients of the derivative are unavailable: zeroed
    assert df.partial((2, 0, 0, 0)) == 0.0


def test_partial_beyond_truncation_raises():
    x, _, _, _ = _vars([0.5, 0.0, 0.0, 0.0], order=2)
    with pytest.raises(OrderExceeded):
        x.partial((3, 0, 0, 0))


def test_batched_evaluation_matches_loop():
    pts = np.array([[0.5, 1.5, -0.5], [0.2, 0.1, 0.3],
                    [0.0, 0.4, 0.8], [1.0, 2.0, 3.0]])
    xs = jt.Jet.variables(pts, 2)
    f = xs[0].sin() * xs[3] + xs[1] * xs[2]
    for col in range(3):
        x1 = jt.Jet.variables(pts[:, col], 2)
        g = x1[0].sin() * x1[3] + x1[1] * x1[2]
        assert np.asarray(f.partial((1, 0, 0, 1)))[col] == pytest.approx(
            g.partial((1, 0, 0, 1)), rel=1e-14)


def test_numeric_jet_matches_closed_form():
    def f(p):
        return np.sin(p[0]) * p[1] + np.exp(0.3 * p[2]) + p[3] ** 2

    pts = np.array([[0.4], [1.3], [0.2], [0.7]])
    cfg = jt.DiffConfig()
    jet = jt.numeric_jet(f, pts, 2, cfg)
    assert jet.partial((1, 0, 0, 0))[0] == pytest.approx(
        np.cos(0.4) * 1.3, rel=1e-8)
    assert jet.partial((0, 0, 0, 2))[0] == pytest.approx(2.0, rel=1e-6)
    assert jet.partial((1, 1, 0, 0))[0] == pytest.approx(
        np.cos(0.4), rel=1e-7)


def test_numeric_jet_per_point_scale():
    def f(p):
        return 1.0 / p[0]

    pts = np.array([[100.0, 0.5], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
    cfg = jt.DiffConfig()
    scale = np.vstack([np.abs(pts[0]), np.ones(2), np.ones(2), np.ones(2)])
    jet = jt.numeric_jet(f, pts, 2, cfg, scale=scale)
    vals = np.asarray(jet.partial((2, 0, 0, 0)))
    assert vals[0] == pytest.approx(2.0 / 100.0 ** 3, rel=1e-6)
    assert vals[1] == pytest.approx(2.0 / 0.5 ** 3, rel=1e-6)
