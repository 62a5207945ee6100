"""Conformal Kahler structure: identities, Killing field, positivity."""

import numpy as np
import pytest

from instanton import catalog, geometry, hermitian
from instanton.errors import TypeMismatch


@pytest.fixture(scope="module")
def eh_pair():
    chart = geometry.orientation_flip(catalog.make_metric("eguchi_hanson"))
    return hermitian.conformal_pair(chart)


@pytest.fixture(scope="module")
def kasner_pair():
    return hermitian.conformal_pair(catalog.make_metric("kasner"))


def test_pair_requires_two_eigenvalue_type():
    with pytest.raises(TypeMismatch):
        hermitian.conformal_pair(catalog.make_metric("flat"))


def test_scalar_identity(eh_pair):
    samples = hermitian.default_samples(eh_pair, 8, 3)
    assert hermitian.scalar_identity_residual(eh_pair, samples) < 1e-5


def test_scalar_sign_negative_on_end_model(kasner_pair):
    assert kasner_pair.sign == -1
    samples = hermitian.default_samples(kasner_pair, 6, 3)
    assert np.all(kasner_pair.conformal_scalar(samples) < 0.0)


def test_conformal_pde(kasner_pair):
    samples = hermitian.default_samples(kasner_pair, 8, 3)
    assert hermitian.conformal_pde_residual(kasner_pair, samples) < 1e-4


def test_extremal_field_is_killing_for_both_metrics(eh_pair):
    samples = hermitian.default_samples(eh_pair, 6, 3)
    field = hermitian.extremal_field(eh_pair)
    res_g, res_h = hermitian.killing_residual(field, eh_pair, samples)
    assert res_g < 1e-6 and res_h < 1e-6


def test_kahler_form_is_parallel(eh_pair):
    samples = hermitian.default_samples(eh_pair, 6, 3)
    structure = hermitian.kahler_structure(eh_pair)
    nabla, dext = hermitian.kahler_residual(eh_pair, samples, structure)
    assert nabla < 1e-5 and dext < 1e-4


def test_moment_map_is_scalar_curvature(eh_pair):
    samples = hermitian.default_samples(eh_pair, 6, 3)
    field = hermitian.extremal_field(eh_pair)
    res, sign = hermitian.hamiltonian_residual(field, eh_pair, samples)
    assert res < 1e-5
    assert sign in (-1, 1)


def test_curvature_form_identity_and_positivity(eh_pair):
    samples = hermitian.default_samples(eh_pair, 8, 3)
    lb = hermitian.lebrun_form(eh_pair, samples)
    assert lb.identity_residual < 1e-7
    assert lb.min_eigenvalue > 0.0


def test_complex_structure_squares_to_minus_one(eh_pair):
    samples = hermitian.default_samples(eh_pair, 6, 3)
    structure = hermitian.kahler_structure(eh_pair)
    _, J = structure.omega_J(samples)
    JJ = np.einsum('nij,njk->nik', J, J)
    assert np.abs(JJ + np.eye(4)).max() < 1e-7
