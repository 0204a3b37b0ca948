import numpy as np
import pytest

from dbar_eit.bie import ScatteringTransform, polar_kgrid
from dbar_eit.dbar import DbarSolver, dbar_grid, disc_xgrid, reconstruct_sigma, relative_l2_error


def _zero_transform(R=2.0):
    k = polar_kgrid(R, 4, 8)
    return ScatteringTransform(k, np.zeros(k.size), R)


def test_grid_resolution_rule():
    g = dbar_grid(4.0)
    assert g.n == 256 and 1 / g.h >= 16
    assert dbar_grid(2.0).n == 128
    with pytest.raises(ValueError):
        dbar_grid(4.0, n=128)
    with pytest.raises(ValueError):
        dbar_grid(-1.0)


def test_zero_transform_gives_unit_conductivity():
    rec = reconstruct_sigma(_zero_transform(), disc_xgrid(8))
    assert np.all(rec.sigma == 1.0) and rec.imag_max == 0
    assert rec.positive


def test_solver_requires_margin():
    with pytest.raises(ValueError):
        DbarSolver(_zero_transform(2.0), dbar_grid(2.0, K_factor=0.9, points_per_unit=8))


def test_disc_xgrid():
    x = disc_xgrid(32)
    assert x.size == 812 and np.all(np.abs(x) < 1)


def test_small_transform_linearisation():
    """For small t the first iterate m0 - 1 is linear in t."""
    k = polar_kgrid(2.0, 8, 16)
    base = -0.05 * np.exp(-np.abs(k) ** 2)
    s1 = DbarSolver(ScatteringTransform(k, base, 2.0)).solve(0.2j)
    s2 = DbarSolver(ScatteringTransform(k, 2 * base, 2.0)).solve(0.2j)
    d1, d2 = s1.m0 - 1, s2.m0 - 1
    assert abs(d2 - 2 * d1) <= 0.05 * abs(d1)
    assert s1.residual < 1e-8


def test_bump_reconstruction_points(bump, bump_t):
    x = np.array([0.0, 0.3, 0.5j, -0.9])
    rec = reconstruct_sigma(bump_t, x, truth=bump)
    assert rec.sigma[0] == pytest.approx(2.0, rel=0.05)
    assert np.all(np.abs(rec.sigma - bump(x)) <= 0.1 * bump(x))
    assert not rec.metrics["imag_exceeds_tol"]
    assert rec.metrics["k_grid_n"] == 256


def test_reconstruction_output():
    rec = reconstruct_sigma(_zero_transform(), np.array([0.1 + 0.2j]), truth=lambda z: np.ones(np.shape(z)))
    lines = rec.to_csv().splitlines()
    assert lines[0] == "x1,x2,sigma_rec" and lines[1].startswith("0.1,0.2,")
    assert rec.metrics["relative_l2_error"] == 0
    assert '"positive": true' in rec.metrics_json()
    assert relative_l2_error([1.1, 0.9], [1.0, 1.0]) == pytest.approx(0.1)
