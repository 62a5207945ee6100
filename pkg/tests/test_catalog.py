"""Metric families, parameter validation, and asymptotic rate fitting."""

import numpy as np
import pytest

from instanton import catalog, geometry
from instanton.errors import (InsufficientRadii, ParamOutOfRange,
                              UnknownFamily)

ALL_FAMILIES = ["flat", "schwarzschild", "kerr", "taub_nut", "taub_bolt",
                "eguchi_hanson", "kasner", "alh_star"]


@pytest.mark.parametrize("name", ALL_FAMILIES)
def test_families_are_ricci_flat(name):
    chart = catalog.make_metric(name)
    pts = geometry.sample_points(chart, 25, 1)
    assert geometry.ricci_frame_norm(chart, pts).max() < 1e-7


def test_unknown_family():
    with pytest.raises(UnknownFamily):
        catalog.make_metric("nosuch")


def test_param_range_enforced():
    with pytest.raises(ParamOutOfRange):
        catalog.make_metric("schwarzschild", {"m": -1.0})
    with pytest.raises(ParamOutOfRange):
        catalog.make_metric("kerr", {"alpha": 5.0})


def test_default_params_applied():
    chart = catalog.make_metric("schwarzschild")
    assert chart.name.startswith("schwarzschild")


def test_decay_needs_enough_radii():
    chart = catalog.make_metric("schwarzschild")
    with pytest.raises(InsufficientRadii):
        catalog.decay_report(chart, catalog.af_model(), [10.0, 20.0, 30.0])


def test_decay_rate_near_one_for_schwarzschild():
    chart = catalog.make_metric("schwarzschild", {"m": 1.0})
    rep = catalog.decay_report(chart, catalog.af_model(),
                               list(np.geomspace(8.0, 135.0, 8)))
    assert 0.9 <= rep.fitted_rate <= 1.1
    assert all(b < a for a, b in zip(rep.sup_deviation,
                                     rep.sup_deviation[1:]))


def test_conformal_expansion_constant():
    chart = catalog.make_metric("schwarzschild", {"m": 1.0})
    const, _ = catalog.conformal_expansion_check(
        chart, [125.0, 250.0, 500.0, 1000.0])
    assert const == pytest.approx(12.0 ** (1.0 / 3.0), rel=0.02)


def test_fd_scale_grows_with_radius():
    chart = catalog.make_metric("taub_nut")
    pts = np.array([[5.0, 50.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0]])
    sc = np.asarray(chart.fd_scale(pts))
    assert sc[0, 1] == pytest.approx(10.0 * sc[0, 0])
