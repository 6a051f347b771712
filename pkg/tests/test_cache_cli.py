import json

import pytest
from click.testing import CliRunner

from quadgeo.cache import SCHEMA_VERSION, Cache
from quadgeo.cli import main, parse_function
from quadgeo.errors import InvalidInput
from quadgeo.forms import class_group
from quadgeo.units import regulator


def run(*args, cache_dir):
    res = CliRunner().invoke(main, [*args, "--cache-dir", str(cache_dir)])
    return res


def test_cache_roundtrip(tmp_path):
    c = Cache(tmp_path, table=True)
    cg, reg = c.class_data(229)
    assert c.misses == 1 and (tmp_path / "229.json").exists()
    cg2, reg2 = Cache(tmp_path, table=True).class_data(229)
    assert reg2 == reg == regulator(229)
    assert [x.forms for x in cg2.cycles] == [x.forms for x in class_group(229).cycles]
    assert (cg2.composition_table == cg.composition_table).all()
    doc = json.loads((tmp_path / "229.json").read_text())
    assert doc["schema"] == SCHEMA_VERSION and doc["pell"] == {"t": str(reg.pell.t), "u": str(reg.pell.u)}


def test_cache_invalidated_by_schema(tmp_path):
    c = Cache(tmp_path)
    c.class_data(40)
    p = tmp_path / "40.json"
    doc = json.loads(p.read_text())
    doc["schema"] = -1
    p.write_text(json.dumps(doc))
    c2 = Cache(tmp_path)
    c2.class_data(40)
    assert c2.misses == 1 and json.loads(p.read_text())["schema"] == SCHEMA_VERSION


def test_cache_upgrades_missing_table(tmp_path):
    Cache(tmp_path, table=False).class_data(40)
    cg, _ = Cache(tmp_path).class_data(40, table=True)
    assert cg.composition_table is not None


def test_env_var_default(tmp_path, monkeypatch):
    monkeypatch.setenv("QUADGEO_CACHE_DIR", str(tmp_path / "env"))
    assert Cache().directory == tmp_path / "env"


def test_classgroup_command(tmp_path):
    res = run("classgroup", "40", cache_dir=tmp_path)
    assert res.exit_code == 0
    doc = json.loads(res.output)["classgroups"][0]
    assert doc["h"] == 2 and doc["regulator"] == pytest.approx(3.6369, abs=1e-4)
    five = json.loads(run("classgroup", "5", cache_dir=tmp_path).output)["classgroups"][0]
    assert five["h"] == 1 and len(five["cycles"]) == 1 and len(five["cycles"][0]) == 2
    bad = run("classgroup", "7", cache_dir=tmp_path)
    assert bad.exit_code == 2 and "InvalidDiscriminant" in bad.output


def test_equidist_single_row(tmp_path):
    res = run("equidist", "--d", "40", "--f", "cusp:2", "--full", cache_dir=tmp_path)
    assert res.exit_code == 0
    lines = res.output.strip().split("\n")
    assert len(lines) == 2 and lines[0].startswith("d,f_id,kind,q_or_r")


def test_equidist_fit_json(tmp_path):
    res = run("equidist", "--d-range", "1e3:1e4:log8", "--f", "cusp:2", "--fit", "--format", "json",
              cache_dir=tmp_path)
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert "gamma_hat" in doc["sweep"]["fit"] and len(doc["sweep"]["reports"]) == 8


def test_equidist_family(tmp_path):
    res = run("equidist", "--family", "n2plus4", "--n", "1,3", "--tube", "P5:0.05", "--probe", "0.1",
              "--samples", "5000", "--format", "json", cache_dir=tmp_path)
    assert res.exit_code == 0
    rep = json.loads(res.output)["adversarial"]
    assert rep["points"][0]["tube_mass"] == 1.0


def test_equidist_errors(tmp_path):
    assert run("equidist", "--d", "40", "--step", "-1", cache_dir=tmp_path).exit_code == 2
    assert run("equidist", "--d", "40", "--f", "nonsense", cache_dir=tmp_path).exit_code == 2
    assert run("equidist", "--d", "40", "--tube", "P5:0.5", cache_dir=tmp_path).exit_code == 2
    assert run("equidist", "--d", "965", "--tube", "P5:0.01", cache_dir=tmp_path).exit_code == 2
    assert run("equidist", "--d", "7", cache_dir=tmp_path).exit_code == 2
    assert run("equidist", "--d-range", "1e3:1e4:log4", "--fit", cache_dir=tmp_path).exit_code == 2
    assert run("equidist", "--d-range", "1e3:1e4:log8", "--f", "const", "--fit", cache_dir=tmp_path).exit_code == 3


def test_mixing_commands(tmp_path):
    res = run("mixing", "--f", "const", "--samples", "1000", cache_dir=tmp_path)
    rows = [r.split(",") for r in res.output.strip().split("\n")[1:]]
    assert res.exit_code == 0 and all(float(r[3]) == 0 for r in rows)
    res = run("mixing", "--f", "cusp:2", "--corr", "--t", "0,2,4,8", "--samples", "20000", cache_dir=tmp_path)
    rows = [r.split(",") for r in res.output.strip().split("\n")[1:]]
    corr = [abs(float(r[3])) for r in rows if r[1] == "corr"]
    assert len(corr) == 4 and corr[0] == max(corr)
    res = run("mixing", "--f", "cusp:2", "--variance", "--T", "1,2,4", "--samples", "2000", cache_dir=tmp_path)
    assert res.exit_code == 0 and "fit_slope" in res.output


def test_observables_and_shadowing_and_geodesics(tmp_path):
    res = run("observables", "list", "--format", "csv", cache_dir=tmp_path)
    assert res.exit_code == 0 and "cusp:2,0.477" in res.output
    res = run("shadowing", "--r", "1e-2,1e-3", "--starts", "2", cache_dir=tmp_path)
    assert res.exit_code == 0 and json.loads(res.output)["shadowing"]["slopes"][0] > 0
    res = run("geodesics", "40", "--step", "0.5", cache_dir=tmp_path)
    assert res.exit_code == 0 and res.output.startswith("d,class,t,x,y,theta")


def test_warm_and_cold_cache_give_identical_bytes(tmp_path):
    args = ("equidist", "--d", "40", "--d", "1001", "--f", "cusp:2", "--format", "json")
    cold = run(*args, cache_dir=tmp_path / "a").output
    warm = run(*args, cache_dir=tmp_path / "a").output
    other = run(*args, cache_dir=tmp_path / "b").output
    assert cold == warm == other


def test_parse_function():
    assert parse_function("cusp:2:0.5").id == "cusp:2:0.5"
    assert parse_function("const").id == "const"
    with pytest.raises(InvalidInput):
        parse_function("cusp:x")
