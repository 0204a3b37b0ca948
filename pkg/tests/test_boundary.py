import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbar_eit.boundary import (
    SQRT_2PI,
    BoundaryField,
    DNMatrix,
    dn_map_identity,
    harmonic_extend,
    harmonic_extend_xy,
    hs_norm,
    pairing,
    project,
)

coeff = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


def fields(N):
    return st.lists(coeff, min_size=2 * N + 1, max_size=2 * N + 1).map(BoundaryField)


def test_basis_samples_roundtrip():
    theta = 2 * np.pi * np.arange(64) / 64
    f = BoundaryField.from_samples(np.exp(3j * theta) / SQRT_2PI, 5)
    assert np.allclose(f.coeffs, BoundaryField.basis(3, 5).coeffs, atol=1e-14)


def test_cosine_coefficients():
    f = BoundaryField.from_function(np.cos, 4)
    assert np.isclose(f.coeff(1), SQRT_2PI / 2) and np.isclose(f.coeff(-1), SQRT_2PI / 2)
    assert f.is_real()


def test_project_errors_and_identity():
    f = BoundaryField(np.arange(9.0))
    assert project(f, 4) == f
    assert np.all(project(f, 0).coeffs[np.arange(9) != 4] == 0)
    with pytest.raises(ValueError):
        project(f, 5)
    with pytest.raises(ValueError):
        project(f, -1)


def test_hs_norm_of_basis():
    assert hs_norm(BoundaryField.basis(3, 5), 0.5) == pytest.approx(2.0)
    assert hs_norm(BoundaryField.basis(0, 5), -0.5) == pytest.approx(1.0)


def test_pairing_is_integral():
    # int cos^2 = pi on the circle
    f = BoundaryField.from_function(np.cos, 3)
    assert pairing(f, f) == pytest.approx(np.pi)


@given(fields(3), fields(3))
@settings(max_examples=30, deadline=None)
def test_pairing_symmetric_bilinear(f, g):
    assert np.isclose(pairing(f, g), pairing(g, f), atol=1e-9)
    assert np.isclose(pairing(2 * f, g), 2 * pairing(f, g), atol=1e-9)


@given(fields(4))
@settings(max_examples=30, deadline=None)
def test_project_is_idempotent(f):
    p = project(f, 2)
    assert project(p, 2) == p
    assert hs_norm(p, 0.5) <= hs_norm(f, 0.5) + 1e-12


@given(fields(3))
@settings(max_examples=20, deadline=None)
def test_json_roundtrip(f):
    g = BoundaryField.from_json(f.to_json())
    assert np.allclose(g.coeffs, f.coeffs)
    assert len(json.loads(f.to_json())) == 7


def test_harmonic_extension():
    f = BoundaryField.basis(2, 3)
    r, th = 0.5, 0.3
    assert harmonic_extend(f, r, th) == pytest.approx(0.25 * np.exp(0.6j) / SQRT_2PI)
    assert harmonic_extend_xy(f, 0.5 * np.exp(0.3j)) == pytest.approx(0.25 * np.exp(0.6j) / SQRT_2PI)
    with pytest.raises(ValueError):
        harmonic_extend(f, 1.5, 0.0)


def test_identity_dn_map():
    L = dn_map_identity(3)
    assert L.entry(-2, -2) == 2 and L.entry(0, 0) == 0
    f = BoundaryField.basis(-3, 3)
    assert np.allclose(L.apply(f).coeffs, 3 * f.coeffs)
    assert L.hermitian_defect() == 0.0


def test_dn_matrix_serialization_and_truncate():
    rng = np.random.default_rng(1)
    E = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
    A = DNMatrix(E, "difference")
    B = DNMatrix.from_json(A.to_json())
    assert np.allclose(B.entries, E) and B.tag == "difference"
    assert A.truncate(1).entries.shape == (3, 3)
    with pytest.raises(ValueError):
        A.truncate(4)
    lines = A.diagonal_csv().splitlines()
    assert lines[0] == "n,re,im" and lines[1].startswith("-3,")
    assert (A - dn_map_identity(3)).tag == "difference"


def test_dn_matrix_validation():
    with pytest.raises(ValueError):
        DNMatrix(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        DNMatrix(np.zeros((3, 3)), "other")
