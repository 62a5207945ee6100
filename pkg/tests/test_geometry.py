"""Curvature assembly, frame norms, and the eigenvalue trichotomy."""

import numpy as np
import pytest

from instanton import catalog, geometry
from instanton.errors import DomainError, InconclusiveError, TypeMismatch


def _pts(chart, n=16, seed=0):
    return geometry.sample_points(chart, n, seed)


def test_flat_curvature_vanishes():
    chart = catalog.make_metric("flat")
    pts = _pts(chart)
    b = geometry.curvature_arrays(chart, pts)
    assert np.abs(b.riemann).max() < 1e-10
    assert geometry.ricci_frame_norm(chart, pts).max() < 1e-10


def test_schwarzschild_is_ricci_flat_but_curved():
    chart = catalog.make_metric("schwarzschild", {"m": 1.0})
    pts = _pts(chart)
    assert geometry.ricci_frame_norm(chart, pts).max() < 1e-9
    b = geometry.curvature_arrays(chart, pts)
    assert geometry.riemann_frame_norm_from_bundle(b).max() > 1e-4


def test_weyl_eigenvalues_trace_free():
    chart = catalog.make_metric("taub_bolt")
    pts = _pts(chart, n=8)
    op = geometry.weyl_operator_arrays(chart, pts)
    assert np.abs(op.eigenvalues.sum(axis=1)).max() < 1e-9


def test_orientation_flip_swaps_selfdual_halves():
    chart = catalog.make_metric("eguchi_hanson")
    p = _pts(chart, n=1)[:, 0]
    plus = geometry.weyl_plus(chart, p).eigenvalues
    flipped = geometry.weyl_plus(geometry.orientation_flip(chart), p)
    minus = geometry.weyl_minus(chart, p).eigenvalues
    assert np.allclose(np.sort(flipped.eigenvalues), np.sort(minus),
                       atol=1e-10)
    # one side is flat, the other is not
    mags = sorted([np.abs(plus).max(), np.abs(minus).max()])
    assert mags[0] < 1e-10 and mags[1] > 1e-4


def test_classification_labels():
    assert geometry.classify_type(catalog.make_metric("flat"),
                                  n_samples=8).label == "I"
    assert geometry.classify_type(catalog.make_metric("schwarzschild"),
                                  n_samples=8).label == "II"


def test_lambda_field_requires_two_eigenvalue_type():
    with pytest.raises(TypeMismatch):
        geometry.lambda_field(catalog.make_metric("flat"), n_samples=8)


def test_lambda_closed_form_on_schwarzschild():
    chart = catalog.make_metric("schwarzschild", {"m": 1.0})
    lam = geometry.lambda_field(chart, n_samples=8)
    pts = _pts(chart, n=8)
    r = pts[0]
    assert np.abs(lam(pts) - 12.0 / r ** 3).max() < 1e-9


def test_domain_guard():
    chart = catalog.make_metric("schwarzschild", {"m": 1.0})
    bad = np.array([[1.0], [1.0], [1.0], [1.0]])   # inside the horizon radius
    with pytest.raises(DomainError):
        chart.require_domain(bad)


def test_sample_points_deterministic():
    chart = catalog.make_metric("kerr")
    a = geometry.sample_points(chart, 12, 5)
    b = geometry.sample_points(chart, 12, 5)
    assert np.array_equal(a, b)
    c = geometry.sample_points(chart, 12, 6)
    assert not np.array_equal(a, c)
