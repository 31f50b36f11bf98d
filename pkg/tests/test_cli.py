import json

import numpy as np
import pytest

from ergokit import cli
from ergokit.curves import breakpoints_from_csv


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_curve_json_and_csv_agree(capsys):
    code, out, _ = run(capsys, "curve", "--spectrum", "[0,0.6,2,3.4,4]")
    assert code == 0 and json.loads(out)["breakpoints"] == [[2.0, 0.0], [4.0, 4.0]]
    code, csv_out, _ = run(capsys, "curve", "--spectrum", "[0,0.6,2]", "--format", "csv")
    _, js, _ = run(capsys, "curve", "--spectrum", "[0,0.6,2]")
    assert breakpoints_from_csv(csv_out) == [tuple(b) for b in json.loads(js)["breakpoints"]]


def test_spectrum_from_file(tmp_path, capsys):
    f = tmp_path / "spec.csv"
    f.write_text("level\n0\n1.5\n2\n")
    code, out, _ = run(capsys, "curve", "--spectrum", str(f), "--mode", "inject")
    assert code == 0 and json.loads(out)["breakpoints"][0] == [0.0, 2.0]


def test_eval_fields(capsys):
    code, out, _ = run(capsys, "eval", "--spectrum", "[0,0.6,2]", "--energy", "1.3")
    d = json.loads(out)
    assert code == 0
    assert d["min_ergotropy"] == pytest.approx(0.764706, abs=1e-6)
    assert d["max_ergotropy"] == 1.3 and d["pinsker_extract"] < 0
    code, out, _ = run(capsys, "eval", "--spectrum", "[0,0.6,2]", "--energy", "0", "2")
    rows = json.loads(out)
    assert len(rows) == 2 and rows[0]["pinsker_extract"] is None


def test_ergotropy_command(tmp_path, capsys):
    f = tmp_path / "rho.json"
    f.write_text("[0.2, 0.3, 0.5]")
    code, out, _ = run(capsys, "ergotropy", "--spectrum", "[0,0.6,2]", "--state", str(f))
    assert code == 0 and json.loads(out)["ergotropy"] == pytest.approx(0.6)


def test_protocol_builtins(capsys, tmp_path):
    code, out, _ = run(capsys, "protocol", "--spectrum", "[0,1.5,2]", "--energy", "1.8", "--channel", "builtin:rev")
    d = json.loads(out)
    assert code == 0 and d["value"] == pytest.approx(1.2, abs=1e-8) and d["upper_bound"] == pytest.approx(1.2)
    code, out, _ = run(capsys, "protocol", "--spectrum", "[0,1.5,2]", "--energy", "1.4",
                       "--channel", "builtin:qutrit-opt")
    assert code == 0 and json.loads(out)["value"] < json.loads(out)["upper_bound"]
    ch = tmp_path / "ch.json"
    ch.write_text(json.dumps({"members": [{"weight": 1.0, "re": np.eye(3).tolist(), "im": np.zeros((3, 3)).tolist()}]}))
    code, out, _ = run(capsys, "protocol", "--spectrum", "[0,1.5,2]", "--energy", "1.0", "--channel", str(ch))
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.0, abs=1e-12)


def test_qutrit_row(capsys):
    code, out, _ = run(capsys, "qutrit", "--eps", "1", "--delta", "-0.4", "--energy", "1.3")
    row = json.loads(out)["rows"][0]
    assert row["min_ergotropy"] == pytest.approx(0.764706, abs=1e-6)
    assert row["worst_rev"] == pytest.approx(0.6, abs=1e-12)
    code, out, _ = run(capsys, "qutrit", "--eps", "1", "--delta", "0.5", "--grid", "11", "--format", "csv")
    lines = out.splitlines()
    assert lines[0] == "E,min_ergotropy,worst_rev,worst_diag_optimal" and len(lines) == 12


@pytest.mark.parametrize(
    "argv",
    [
        ["curve", "--spectrum", "[]"],
        ["eval", "--spectrum", "[0,1]", "--energy", "3"],
        ["curve", "--spectrum", "/no/such/file"],
        ["qutrit", "--eps", "1", "--delta", "2"],
        ["protocol", "--spectrum", "[0,1]", "--energy", "0.5", "--channel", "builtin:nope"],
        ["nonsense"],
    ],
)
def test_errors_exit_1_with_json(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 1 and out == ""
    assert len(err.strip().splitlines()) == 1 and "error" in json.loads(err)


def test_verify_and_determinism(capsys, monkeypatch):
    code, first, _ = run(capsys, "verify", "--seed", "7", "--spectra", "10")
    assert code == 0 and json.loads(first)["passed"]
    _, second, _ = run(capsys, "verify", "--seed", "7", "--spectra", "10")
    assert first == second
    monkeypatch.setenv("ERGOKIT_SEED", "7")
    _, third, _ = run(capsys, "verify", "--spectra", "10")
    assert third == first


def test_verify_failure_exits_2(capsys, monkeypatch):
    from ergokit import oracle

    bad = oracle.OracleReport.compare("x", "grid", 1.0, 2.0, 1, 0.1)
    monkeypatch.setattr(oracle, "run_suite", lambda **kw: [bad])
    code, out, _ = run(capsys, "verify")
    assert code == 2 and json.loads(out)["passed"] is False


def test_output_file(tmp_path, capsys):
    target = tmp_path / "curve.csv"
    code, out, _ = run(capsys, "curve", "--spectrum", "[0,1,2]", "--format", "csv", "--output", str(target))
    assert code == 0 and out == "" and target.read_text().startswith("E,value")
