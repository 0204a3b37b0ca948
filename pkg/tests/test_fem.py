import numpy as np
import pytest

from dbar_eit.boundary import BoundaryField, pairing
from dbar_eit.fem import (
    DirichletSolver,
    MeshResolutionError,
    alessandrini_pairing,
    assemble_dn_map,
    disc_mesh,
    dn_difference,
    estimate_tol_fem,
    radial_dn_eigenvalue,
)
from dbar_eit.phantoms import Inclusions, two_layer, unit_conductivity


def two_layer_exact(n, sigma0=2.0, rho=0.5):
    mu = (1 - sigma0) / (1 + sigma0)
    return n * (1 - mu * rho ** (2 * n)) / (1 + mu * rho ** (2 * n))


def test_transfer_matrix_matches_closed_form():
    assert radial_dn_eigenvalue((0.5,), (2.0,), 1) == pytest.approx(13 / 11, rel=1e-14)
    for n in range(1, 9):
        assert radial_dn_eigenvalue((0.5,), (2.0,), n) == pytest.approx(two_layer_exact(n), rel=1e-13)
    assert radial_dn_eigenvalue((), (), 3) == 3.0
    assert radial_dn_eigenvalue((0.5,), (2.0,), 0) == 0.0


def test_transfer_matrix_three_layers_limit():
    # equal values collapse to a two-layer problem
    assert radial_dn_eigenvalue((0.3, 0.5), (2.0, 2.0), 2) == pytest.approx(two_layer_exact(2), rel=1e-13)


def test_mesh_rotational_symmetry_and_boundary():
    m = disc_mesh(64, radii=(0.5,))
    assert m.n_boundary == 64
    assert np.allclose(np.abs(m.z[m.boundary]), 1.0)
    r = np.abs(m.z)
    assert np.sum(np.isclose(r, 0.5)) >= 16
    assert np.all(m.areas > 0)


def test_mesh_resolution_check():
    m = disc_mesh(64)
    m.check_resolution(8)
    with pytest.raises(MeshResolutionError):
        m.check_resolution(9)


def test_raw_unit_map_close_to_identity():
    m = disc_mesh(256)
    L = assemble_dn_map(unit_conductivity(), 8, m, corrected=False)
    d = L.diagonal().real
    n = np.abs(np.arange(-8, 9))
    assert np.max(np.abs(d - n) / np.maximum(n, 1)) < 2e-3
    assert L.hermitian_defect() < 1e-10


def test_difference_matches_oracle(layer_A):
    d = layer_A.diagonal().real
    for n in range(1, 9):
        exact = two_layer_exact(n)
        assert abs(n + d[16 + n] - exact) <= 1e-3 * exact
        assert abs(d[16 + n] - (exact - n)) <= 0.1 * abs(exact - n)
    off = layer_A.entries - np.diag(layer_A.diagonal())
    assert np.abs(off).max() <= 1e-6 * np.abs(d).max()
    assert layer_A.hermitian_defect() < 1e-10


def test_difference_error_is_second_order(layer):
    errs = []
    for nb in (128, 256):
        d = dn_difference(layer, 8, disc_mesh(nb, radii=(0.5,))).diagonal().real
        errs.append(np.array([abs(d[8 + n] - (two_layer_exact(n) - n)) for n in range(1, 6)]))
    ratio = errs[1] / errs[0]
    assert np.all(ratio < 0.35)


def test_unit_difference_is_zero(layer_mesh):
    A = dn_difference(unit_conductivity(), 8, layer_mesh)
    assert np.all(A.entries == 0)


def test_alessandrini_identity(layer, layer_mesh):
    f = BoundaryField.from_function(lambda t: np.cos(t) + 0.3 * np.sin(2 * t), 8)
    g = BoundaryField.from_function(lambda t: np.sin(t) - 0.2 * np.cos(3 * t), 8)
    L = assemble_dn_map(layer, 8, layer_mesh, corrected=False)
    lhs = alessandrini_pairing(g, f, layer, layer_mesh)
    assert lhs == pytest.approx(pairing(g, L.apply(f)), rel=1e-8)


def test_solver_residual(layer, layer_mesh):
    s = DirichletSolver(layer, layer_mesh)
    u = s.solve(BoundaryField.basis(2, 4))
    assert s.residual(u) < 1e-12


def test_positive_conductivity_required(layer_mesh):
    class Bad(unit_conductivity().__class__):
        def __call__(self, z):
            return -np.ones(np.shape(z))

    with pytest.raises(ValueError):
        DirichletSolver(Bad((), (), r1=0.5), layer_mesh)


def test_inclusion_difference_hermitian_and_tol():
    inc = Inclusions([0.3 + 0.1j], [0.2], [3.0], r1=0.6)
    tol = estimate_tol_fem(inc, N=8, n_boundary=128)
    assert tol < 1e-2
    A = dn_difference(inc, 8, disc_mesh(128, circles=((0.3 + 0.1j, 0.2),)))
    assert A.hermitian_defect() < 1e-10


def test_tol_fem_two_layer():
    assert estimate_tol_fem(two_layer(), N=8) < 1e-3
