import json

import numpy as np
import pytest

from dbar_eit.bie import ScatteringTransform
from dbar_eit.boundary import BoundaryField, DNMatrix
from dbar_eit.cli import main, parse_complex
from dbar_eit.phantoms import smooth_bump, two_layer


@pytest.fixture
def phantoms(tmp_path):
    layer = tmp_path / "layer.json"
    layer.write_text(two_layer().to_json())
    bump = tmp_path / "bump.json"
    bump.write_text(smooth_bump().to_json())
    return layer, bump


def test_parse_complex():
    assert parse_complex("1+0i") == 1
    assert parse_complex("-0.5+2i") == complex(-0.5, 2)
    assert parse_complex("2j") == 2j


def test_dn_outputs(tmp_path, phantoms):
    layer, _ = phantoms
    js, cs = tmp_path / "A.json", tmp_path / "d.csv"
    assert main(["dn", "--phantom", str(layer), "--N", "4", "--n-boundary", "128", "--difference", "--json", str(js), "--csv", str(cs)]) == 0
    A = DNMatrix.from_json(js.read_text())
    assert A.tag == "difference" and A.N == 4
    lines = cs.read_text().splitlines()
    assert lines[0] == "n,re,im" and len(lines) == 10


def test_trace_json(tmp_path, phantoms):
    layer, _ = phantoms
    out = tmp_path / "g.json"
    main(["trace", "--phantom", str(layer), "--k", "1+0i", "--N", "8", "--n-boundary", "128", "--out", str(out)])
    pairs = json.loads(out.read_text())
    assert len(pairs) == 17 and all(len(p) == 2 for p in pairs)
    assert BoundaryField.from_json(out.read_text()).N == 8


def test_tks_recon_pipeline(tmp_path, phantoms):
    layer, _ = phantoms
    t_csv, t_json = tmp_path / "t.csv", tmp_path / "t.json"
    main(["tks", "--phantom", str(layer), "--R", "2", "--grid", "2x4", "--N", "12", "--out", str(t_csv), "--json", str(t_json)])
    t = ScatteringTransform.from_csv(t_csv.read_text(), R=2.0)
    assert t.values.size == 8 and np.all(np.isfinite(t.values))
    assert ScatteringTransform.from_json(t_json.read_text()).provenance == "boundary"
    rec, met = tmp_path / "rec.csv", tmp_path / "m.json"
    main(["recon", "--t", str(t_csv), "--R", "2", "--xgrid", "4", "--phantom", str(layer), "--out", str(rec), "--metrics", str(met)])
    assert rec.read_text().splitlines()[0] == "x1,x2,sigma_rec"
    m = json.loads(met.read_text())
    assert m["R"] == 2 and "relative_l2_error" in m and m["n_points"] == 12


def test_tks_direct_and_tau(tmp_path, phantoms):
    _, bump = phantoms
    d = tmp_path / "d.csv"
    main(["tks", "--phantom", str(bump), "--method", "direct", "--R", "1", "--grid", "1x2", "--ls-grid", "64", "--out", str(d)])
    assert len(d.read_text().splitlines()) == 3
    tau = tmp_path / "tau.csv"
    main(["tau", "--phantom", str(bump), "--k-grid", "1x2", "--R", "1", "--n", "64", "--out", str(tau)])
    assert ScatteringTransform.from_csv(tau.read_text(), R=1.0).values.size == 2


def test_study_outputs(tmp_path, phantoms):
    layer, _ = phantoms
    out = tmp_path / "report.json"
    main(["study", "--phantom", str(layer), "--n", "2,4", "--k", "1+0i", "--N", "12", "--n-boundary", "128", "--out", str(out)])
    rep = json.loads(out.read_text())
    assert len(rep["rows"]) == 2
    for suffix in ("_norms.csv", "_transform.csv", "_decay.gp"):
        assert (tmp_path / f"report{suffix}").exists()
    assert "report_norms.csv" in (tmp_path / "report_decay.gp").read_text()


def test_kernel_table_cache(tmp_path, capsys):
    p = tmp_path / "g1.npz"
    main(["kernel-table", "--path", str(p)])
    assert p.exists()
    first = json.loads(capsys.readouterr().out)
    main(["kernel-table", "--path", str(p), "--rebuild"])
    assert json.loads(capsys.readouterr().out) == first


def test_unknown_phantom_kind(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "ellipse"}')
    with pytest.raises(Exception, match="ellipse"):
        main(["dn", "--phantom", str(bad)])
