import io
import json
import os

import pytest

from necrostab import cli, radial, verify


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run_command(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_heleshaw_table():
    code, out, _ = run(["heleshaw", "--n", "3", "--kmax", "5"])
    assert code == 0
    assert [line.split(",")[1] for line in out.splitlines()[1:]] == ["0", "0", "-4", "-15", "-36", "-70"]


def test_threshold_above_gamma_star_is_stable():
    code, out, _ = run(["threshold", "--gamma", "3.2"])
    assert code == 0 and "classification = stable-modulo-translations" in out
    code, out, _ = run(["threshold", "--gamma", "2.9"])
    assert "classification = unstable" in out


def test_spectrum_json_round_trip_and_determinism(tmp_path, stat0):
    p1, p2, tab = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "t.csv"
    assert run(["spectrum", "--gamma", "4", "-o", str(p1), "--table", str(tab)])[0] == 0
    assert run(["spectrum", "--gamma", "4", "-o", str(p2)])[0] == 0
    assert p1.read_bytes() == p2.read_bytes()
    doc = json.loads(p1.read_text())
    assert doc["r_s"] == stat0.r_s
    assert cli.json_text(doc) == p1.read_text()
    rows = tab.read_text().splitlines()
    assert rows[0] == "k,a_k,gamma_k"
    assert float(rows[3].split(",")[1]) == doc["a"][2]
    assert float(rows[3].split(",")[2]) == doc["gamma_k"][0]
    assert not [f for f in os.listdir(tmp_path) if f.startswith(".tmp-")]


def test_stationary_csv_and_json(tmp_path, stat0):
    code, out, _ = run(["stationary", "--points", "5"])
    assert code == 0 and out.splitlines()[0] == "r,sigma,dsigma,pi0,dpi0"
    assert len(out.splitlines()) == 6
    path = tmp_path / "s.json"
    code, out, _ = run(["stationary", "--format", "json", "-o", str(path)])
    assert code == 0 and out.startswith("r_star = ")
    assert json.loads(path.read_text())["k_s"] == stat0.k_s


def test_evolve_and_modes(tmp_path):
    code, out, _ = run(["evolve", "--t-end", "5", "--samples", "3"])
    assert code == 0 and out.splitlines()[0] == "t,R" and len(out.splitlines()) == 4
    pert = tmp_path / "p.txt"
    pert.write_text("# k l c\n2 3 0.01\n1, 1, 0.02\n")
    snap = tmp_path / "snap.csv"
    code, out, _ = run(["modes", "--gamma", "4", "--perturbation", str(pert), "--t-end", "1",
                        "--samples", "2", "--snapshot", str(snap)])
    assert code == 0
    assert out.splitlines()[0] == "t,c_1_1,c_2_3"
    assert snap.read_text().splitlines()[0] == "theta,phi,radius"


def test_invalid_inputs_exit_1(tmp_path):
    assert run(["stationary", "--b", "0.6"])[0] == 1
    assert run(["stationary", "--sigma-hat", "1.5"])[0] == 1
    assert run(["spectrum"])[0] == 1  # gamma missing
    assert run(["threshold", "--gamma", "-1"])[0] == 1
    assert run(["modes", "--gamma", "1", "--perturbation", str(tmp_path / "missing")])[0] == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("2 9 0.1\n")
    assert run(["modes", "--gamma", "1", "--perturbation", str(bad)])[0] == 1
    assert run(["nonsense"])[0] == 1
    code, _, err = run(["stationary", "--b", "0.6"])
    assert "b < a*sigma_hat" in err


def test_solver_failure_exit_2(monkeypatch):
    def boom(params):
        raise radial.SolverError("forced")
    monkeypatch.setattr(radial, "solve_stationary_radius", boom)
    code, _, err = run(["threshold"])
    assert code == 2 and "stage 'stationary radius'" in err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# test\na = 2\nkmax = 40\n")
    _, shown, _ = run(["--config", str(cfg), "--show-config"])
    assert "a = 2\n" in shown and "kmax = 40\n" in shown and "b = 0.25\n" in shown
    p_file = tmp_path / "f.json"
    run(["threshold", "--config", str(cfg), "--format", "json", "-o", str(p_file)])
    assert json.loads(p_file.read_text())["params"]["a"] == 2.0
    run(["threshold", "--config", str(cfg), "--a", "1", "--format", "json", "-o", str(p_file)])
    assert json.loads(p_file.read_text())["params"]["a"] == 1.0
    cfg.write_text("nonsense_key = 1\n")
    assert run(["--config", str(cfg), "--show-config"])[0] == 1


def test_show_config_round_trips(tmp_path):
    _, shown, _ = run(["--show-config"])
    cfg = tmp_path / "d.cfg"
    cfg.write_text(shown)
    assert cli.read_config_file(str(cfg)) == cli.DEFAULTS


def test_verify_failure_exit_3(monkeypatch):
    real = verify.verify_suite
    monkeypatch.setattr(cli, "verify_suite",
                        lambda params, kmax: real(params, {"gamma_asymptotics": 1e-6}, kmax=kmax))
    code, out, _ = run(["verify", "--kmax", "200"])
    assert code == 3
    assert "FAIL  eigenvalues      gamma-asymptotics" in out


def test_verify_p0_passes(tmp_path):
    path = tmp_path / "v.json"
    code, out, _ = run(["verify", "-o", str(path)])
    assert code == 0 and "overall: PASS" in out
    doc = json.loads(path.read_text())
    names = [c["name"] for c in doc["checks"]]
    assert {"a1-zero", "u1-closed-form", "gamma-asymptotics"} <= set(names)
    assert doc["passed"] is True
