import json

import numpy as np
import pytest

from dbar_eit.phantoms import (
    GridConductivity,
    Inclusions,
    PiecewiseRadial,
    SmoothRadialBump,
    UnsupportedPhantomError,
    from_dict,
    load,
    smooth_step,
    two_layer,
    unit_conductivity,
)


def test_smooth_step_limits_and_monotone():
    t = np.linspace(-1, 2, 2001)
    s = smooth_step(t)
    assert s[0] == 0 and s[-1] == 1
    assert np.all(np.diff(s) >= 0)
    assert smooth_step(0.5) == pytest.approx(0.5)


def test_two_layer_values():
    s = two_layer()
    assert s(np.array([0.1, 0.55, 0.9])).tolist() == [2.0, 1.0, 1.0]
    assert s.ess_inf == 1.0 and s.ess_sup == 2.0
    assert s.radial_interfaces() == (0.5,)


def test_smoothed_layer_stays_below_sharp():
    s = two_layer()
    r = np.linspace(0, 1, 1001)
    assert np.all(s.smoothed(0.1).profile(r) <= s.profile(r))
    assert s.smoothed(0.1).kind == "smooth_radial"


def test_bump_potential_matches_finite_differences():
    b = SmoothRadialBump(2.0, 0.8)
    h = 1e-3
    z = np.array([0.1 + 0.2j, 0.45 - 0.1j, -0.3j])
    root = b.sqrt_sigma
    lap = (root(z + h) + root(z - h) + root(z + 1j * h) + root(z - 1j * h) - 4 * root(z)) / h**2
    assert np.allclose(b.potential(z), lap / root(z), rtol=1e-5, atol=1e-5)
    assert b(np.array([0.0]))[0] == pytest.approx(2.0)
    assert np.all(b(np.array([0.8, 0.9])) == 1.0)


def test_inclusions_validation():
    inc = Inclusions([0.3 + 0j, -0.3 + 0j], [0.15, 0.15], [2.0, 0.5], r1=0.7)
    assert inc(np.array([0.3 + 0j, -0.3 + 0j, 0.0]))[:].tolist() == [2.0, 0.5, 1.0]
    with pytest.raises(ValueError):
        Inclusions([0.1 + 0j, 0.2 + 0j], [0.1, 0.1], [2.0, 2.0], r1=0.7)
    with pytest.raises(ValueError):
        Inclusions([0.8 + 0j], [0.3], [2.0], r1=0.9)


def test_layer_validation():
    with pytest.raises(ValueError):
        PiecewiseRadial((0.5, 0.3), (1.5, 2.0), r1=0.6)
    with pytest.raises(ValueError):
        PiecewiseRadial((0.5,), (-1.0,), r1=0.6)
    with pytest.raises(ValueError):
        PiecewiseRadial((0.5,), (2.0,), r1=1.2)


def test_json_roundtrip(tmp_path):
    for s in (two_layer(), SmoothRadialBump(1.5, 0.7), Inclusions([0.2 + 0.1j], [0.2], [3.0], r1=0.6)):
        p = tmp_path / "p.json"
        p.write_text(s.to_json())
        t = load(p)
        z = np.array([0.0, 0.2 + 0.1j, 0.65])
        assert np.allclose(t(z), s(z))
    with pytest.raises(UnsupportedPhantomError):
        from_dict({"kind": "ellipse"})


def test_grid_conductivity_and_unit():
    g = GridConductivity(np.full((8, 8), 1.5), r1=0.9)
    assert g(np.array([0.1j]))[0] == 1.5
    assert unit_conductivity().is_trivial()
    assert json.loads(unit_conductivity().to_json())["kind"] == "piecewise_radial"
