import json
import subprocess
import sys

import numpy as np
import pytest

from lpx.extension import crmhd, leibniz


def run(*args, stdin=None, cwd=None):
    return subprocess.run([sys.executable, "-m", "lpx.cli", *args], input=stdin,
                          capture_output=True, text=True, cwd=cwd)


@pytest.fixture
def crmhd_file(tmp_path):
    p = tmp_path / "crmhd.json"
    p.write_text(crmhd().dumps())
    return str(p)


@pytest.fixture
def asym_file(tmp_path):
    p = tmp_path / "asym.json"
    W = json.loads(leibniz(2).dumps())
    W["W"][1][0][1] = "1"
    p.write_text(json.dumps(W))
    return str(p)


def test_validate_ok(crmhd_file):
    r = run("validate", crmhd_file)
    assert r.returncode == 0 and r.stderr == ""
    rep = json.loads(r.stdout)
    assert rep["ok"] is True


def test_validate_failure_prints_report(asym_file):
    r = run("validate", asym_file, "--format", "text")
    assert r.returncode == 1
    assert "symmetry: FAIL  first violation at" in r.stdout
    assert r.stderr.startswith("lpx: InvalidTensor:")
    assert len(r.stderr.strip().splitlines()) == 1


@pytest.mark.parametrize("args", [
    ["validate", "/nonexistent/x.json"],
    ["leibniz", "--order", "0"],
    ["simulate", "--I", "1,2"],
    ["stability", "catseye", "--a", "0.5", "--format", "text"],
])
def test_input_errors_exit_2(args):
    r = run(*args)
    assert r.returncode == 2
    assert r.stdout == ""
    assert r.stderr.startswith("lpx: ")


def test_parse_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    r = run("validate", str(p))
    assert r.returncode == 2 and "ParseError" in r.stderr


def test_classify_crmhd(crmhd_file):
    r = run("classify", crmhd_file, "--format", "text")
    assert r.returncode == 0
    assert r.stdout.splitlines()[0].startswith("n3-2 (semidirect")


def test_leibniz_to_casimirs_pipe():
    a = run("leibniz", "--order", "5", "--semidirect")
    assert a.returncode == 0
    b = run("casimirs", "-", "--format", "text", stdin=a.stdout)
    assert b.returncode == 0
    lines = b.stdout.splitlines()
    assert [ln.split(":")[0] for ln in lines] == [f"C{k}" for k in range(6)]
    assert lines[0].startswith("C0: v0 f(v5) + ")


def test_casimirs_coextension(tmp_path):
    p = tmp_path / "l3.json"
    p.write_text(leibniz(3).dumps())
    r = run("casimirs", str(p), "--coextension")
    obj = json.loads(r.stdout)
    assert obj["coextension"]["singular"] is False
    assert len(obj["families"]) == 3


def test_catalog_listing():
    r = run("catalog", "--format", "text")
    assert r.returncode == 0
    assert len(r.stdout.splitlines()) == 13


def test_simulate_csv_and_drift():
    r = run("simulate", "--system", "rigid-body", "--I", "1,2,3", "--dt", "1e-3",
            "--steps", "10000", "--format", "text", "--every", "100")
    assert r.returncode == 0
    lines = r.stdout.splitlines()
    assert lines[0] == "t,v0_1,v0_2,v0_3,H,C1"
    assert len(lines) == 1 + 101
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    assert np.ptp(data[:, -1]) / abs(data[0, -1]) < 1e-8
    # drift summary goes to stderr only
    assert r.stderr.startswith("drift H=")


def test_simulate_json_and_nonfinite():
    r = run("simulate", "--system", "heavy-top", "--steps", "200")
    obj = json.loads(r.stdout)
    assert obj["system"] == "heavy-top" and obj["backend"] in ("cython", "python")
    assert max(obj["drift"].values()) < 1e-8
    r = run("simulate", "--init", "1e200,1e200,1e200", "--I", "1,2,3", "--dt", "10",
            "--steps", "50")
    assert r.returncode == 6 and "NonFinite" in r.stderr


def test_determinism(tmp_path):
    args = ["simulate", "--system", "heavy-top", "--steps", "500", "--seed", "7",
            "--format", "text"]
    assert run(*args).stdout == run(*args).stdout
    outs = [tmp_path / "a.bin", tmp_path / "b.bin"]
    for o in outs:
        assert run("stability", "catseye", "--nx", "32", "--ny", "32", "--out", str(o)).returncode == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()
    meta = json.loads((tmp_path / "a.bin.json").read_text())
    assert meta["nx"] == 32 and len(outs[0].read_bytes()) == 32 * 32 * 8


def test_catseye_text_csv():
    r = run("stability", "catseye", "--nx", "16", "--ny", "16", "--format", "text")
    lines = r.stdout.splitlines()
    assert lines[0] == "x,y,value" and len(lines) == 257


def test_catseye_json_needs_out():
    r = run("stability", "catseye", "--nx", "16", "--ny", "16")
    assert r.returncode == 2


def test_residual_order():
    r = run("stability", "residual", "--nx", "64", "--ny", "64", "--levels", "3")
    obj = json.loads(r.stdout)
    assert all(abs(o - 2) < 0.2 for o in obj["order"])


def test_crmhd_stability_exit_codes(tmp_path):
    p = tmp_path / "prof.json"
    p.write_text(json.dumps({"phi": [["poly", [0, 1]]], "beta_e": 1.0}))
    r = run("stability", "crmhd", str(p))
    assert r.returncode == 7 and "AllResonant" in r.stderr
    p.write_text(json.dumps({"phi": [["poly", [0, 1]]], "beta_e": 0.5}))
    r = run("stability", "crmhd", str(p))
    assert r.returncode == 0
    obj = json.loads(r.stdout)
    assert obj["summary"]["phi_beta_pass"] == 0.0


def test_islands_and_euler():
    r = run("stability", "islands", "--k", "1", "--nu", "0.5", "--format", "text")
    assert r.returncode == 0 and "cond1_pass: 1.0" in r.stdout
    r = run("stability", "euler", "--dpsi", '[["poly", [1]]]', "--dv", '[["poly", [-1]]]')
    assert json.loads(r.stdout)["pass_fraction"] == 0.0


def test_config_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"leibniz": {"order": 3, "format": "text"}}))
    r = run("--config", str(cfg), "leibniz")
    assert r.returncode == 0
    assert not r.stdout.lstrip().startswith("{")
    r = run("--config", str(cfg), "leibniz", "--format", "json")
    assert json.loads(r.stdout)["n"] == 3


def test_out_file(tmp_path, crmhd_file):
    o = tmp_path / "rep.json"
    r = run("validate", crmhd_file, "--out", str(o))
    assert r.stdout == "" and json.loads(o.read_text())["ok"] is True
