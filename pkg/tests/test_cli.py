import csv
import hashlib
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from compton_povm import cli
from compton_povm.optimize import ConvergenceError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_tables_csv(capsys, tmp_path):
    path = tmp_path / "t.csv"
    code, _, _ = run(capsys, "tables", "--n", "3", "--out", str(path))
    assert code == 0
    text = path.read_bytes().decode()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["N", "theta_1", "theta_2", "theta_3", "beta", "max_abs_S", "F", "D", "E_N"]
    assert len(rows) == 4
    assert float(rows[3][4]) == pytest.approx(0.9207, abs=1e-4)
    manifest = json.loads((tmp_path / "t.csv.manifest.json").read_text())
    assert manifest["command"] == "tables"
    assert manifest["parameters"]["n"] == 3
    assert manifest["output_digests"]["t.csv"] == hashlib.sha256(text.encode()).hexdigest()
    assert not (tmp_path / "t.csv.partial").exists()


def test_tables_single_row(capsys):
    code, out, _ = run(capsys, "tables", "--n", "1")
    row = [float(x) for x in out.splitlines()[1].split(",")]
    np.testing.assert_allclose(row[1:], [1.425, 0.6918, 1.3537, 0.8459, 0.1541, 0.5391], atol=1e-3)


def test_tables_reproducible(capsys):
    _, a, _ = run(capsys, "tables", "--n", "2")
    _, b, _ = run(capsys, "tables", "--n", "2")
    assert a == b


def test_tables_degrees_json(capsys):
    code, out, _ = run(capsys, "tables", "--n", "1", "--degrees", "--format", "json")
    data = json.loads(out)
    assert data["rows"][0]["thetas"][0] == pytest.approx(81.66, abs=0.01)


@pytest.mark.parametrize("argv", [
    ["tables", "--n", "0"],
    ["tables", "--n", "11"],
    ["tables", "--e0", "-1"],
    ["xsec", "--n", "6"],
    ["chsh-scan", "--steps", "1"],
    ["chsh-scan", "--beta", "1.5"],
    ["witness", "no_such_state"],
    ["mc", "--pairs", "0"],
    ["bogus"],
    ["tables", "--n", "x"],
])
def test_usage_errors(capsys, argv):
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == cli.EXIT_USAGE


def test_numerical_failure(capsys, tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise ConvergenceError("forced")
    monkeypatch.setattr(cli, "optimum_table", boom)
    path = tmp_path / "t.csv"
    code, _, err = run(capsys, "tables", "--n", "2", "--out", str(path))
    assert code == cli.EXIT_NUMERICAL
    assert "forced" in err
    assert not path.exists()
    assert not (tmp_path / "t.csv.partial").exists()


def test_chsh_scan(capsys, tmp_path):
    code, out, _ = run(capsys, "chsh-scan", "--n", "2", "--steps", "161", "--phi-max", str(np.pi / 4))
    rows = list(csv.DictReader(io.StringIO(out)))
    best = max(float(r["abs_S"]) for r in rows)
    assert best == pytest.approx(2.1326, abs=1e-3)
    _, out1, _ = run(capsys, "chsh-scan", "--n", "1", "--steps", "161")
    assert max(float(r["abs_S"]) for r in csv.DictReader(io.StringIO(out1))) < 2
    manifest = tmp_path / "m.json"
    _, out2, _ = run(capsys, "chsh-scan", "--beta", "0.9982", "--steps", "161",
                     "--phi-max", str(np.pi / 4), "--manifest", str(manifest))
    assert max(float(r["abs_S"]) for r in csv.DictReader(io.StringIO(out2))) == pytest.approx(2.8182, abs=1e-3)
    meta = json.loads(manifest.read_text())["parameters"]["references"]
    assert meta == {"lhv_bound": 2.0, "tsirelson_bound": pytest.approx(2 * np.sqrt(2))}


def test_xsec(capsys):
    code, out, _ = run(capsys, "xsec", "--n", "4", "--format", "json")
    rows = json.loads(out)["rows"]
    assert rows[0]["sigma_tot"] == pytest.approx(3.60846, rel=1e-5)
    assert rows[2]["sigma_tot"] == pytest.approx(78.91078, rel=1e-4)
    assert rows[3]["sigma_tot"] == pytest.approx(434.75406, rel=1e-3)
    assert all(r["error"] >= 0 for r in rows)


def test_xsec_mc(capsys):
    code, out, _ = run(capsys, "xsec", "--n", "6", "--allow-mc", "--mc-samples", "20000", "--format", "json")
    assert code == 0
    assert json.loads(out)["rows"][-1]["method"] == "montecarlo"


def test_witness_reports(capsys):
    _, out, _ = run(capsys, "witness", "omega_mix", "--format", "json")
    rep = json.loads(out)
    assert rep["R"] == pytest.approx(2.84, abs=0.01)
    assert rep["chsh_max"] <= 2.0 + 1e-6
    assert rep["separable_by_ppt"] and rep["verdicts"]["R_claims_entanglement"]
    _, out, _ = run(capsys, "witness", "phi_minus", "--format", "json")
    assert json.loads(out)["chsh_max"] == pytest.approx(2.1326, abs=3e-3)
    _, out, _ = run(capsys, "witness", "product_HV")
    assert "R ratio: 5.489" in out


def test_witness_from_file(capsys, tmp_path):
    m = np.diag([0.5, 0.0, 0.0, 0.5])
    np.save(tmp_path / "s.npy", m)
    (tmp_path / "s.json").write_text(json.dumps(m.tolist()))
    for name in ("s.npy", "s.json"):
        code, out, _ = run(capsys, "witness", str(tmp_path / name), "--format", "json")
        assert code == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(np.diag([1.5, -0.5, 0, 0]).tolist()))
    assert cli.main(["witness", str(bad)]) == cli.EXIT_USAGE


def test_mc_deterministic(capsys):
    argv = ["mc", "--n", "2", "--pairs", "200000", "--seed", "42"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    rep = json.loads(a)
    assert abs(rep["S_emp"] - rep["S_analytic"]) < 4 * rep["standard_error"]
    _, c, _ = run(capsys, "mc", "--n", "1", "--pairs", "200000")
    assert abs(json.loads(c)["S_emp"]) == pytest.approx(1.3537, abs=0.02)


def test_optimize_command(capsys):
    _, out, _ = run(capsys, "optimize", "--n", "2")
    rec = json.loads(out)
    assert rec["beta"] == pytest.approx(0.8683, abs=1e-4)
    assert rec["gradient_norm"] < 1e-5


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "compton_povm", "tables", "--n", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
