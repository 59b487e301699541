import csv
import io
import json

import numpy as np
import pytest

from starjunction.cli import (
    CONVERGE_HEADER,
    SMATRIX_HEADER,
    TWOMODE_HEADER,
    fmt,
    main,
    simulation_header,
)

SMALL_SIM = ["--delta", "0.1", "--sites", "600", "--dt", "0.025", "--carrier-k", "3.0",
             "--center", "15", "--width", "1.5", "--cadence", "20"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_fmt_round_trips():
    for x in (1 / 3, -2.5e-300, 12345.678901234567, 0.0):
        assert float(fmt(x)) == x
    assert fmt(1.0) == "1.0000000000000000e+00"


def test_smatrix_kirchhoff(capsys):
    code, out, _ = run(capsys, "smatrix", "--quiet", "--num-k", "50")
    assert code == 0
    table = rows(out)
    assert ",".join(table[0]) == SMATRIX_HEADER
    data = np.array(table[1:], float)
    assert data.shape == (50, 7)
    assert np.max(np.abs(data[:, 1] + 1 / 3)) <= 1e-15
    assert np.max(np.abs(data[:, 3] - 2 / 3)) <= 1e-15
    assert np.all(data[:, 2] == 0) and np.all(data[:, 4] == 0)
    # k-independent to the last bit
    assert np.all(data[:, 1:] == data[0, 1:])


def test_smatrix_decoupled(capsys):
    _, out, _ = run(capsys, "smatrix", "--quiet", "--family", "decoupled", "--num-k", "5")
    data = np.array(rows(out)[1:], float)
    assert np.all(data[:, 1] == -1) and np.all(data[:, 3] == 0)


def test_smatrix_lattice(capsys):
    code, out, _ = run(capsys, "smatrix", "--quiet", "--family", "lattice", "--delta", "0.3",
                       "--k-max", "10.0")
    assert code == 0
    data = np.array(rows(out)[1:], float)
    assert np.max(np.abs(data[:, 6])) <= 1e-13


def test_smatrix_summary_echoes_config(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, err = run(capsys, "smatrix", "--family", "alpha", "--alpha", "0.5", "--num-k", "4",
                       "--out", str(out))
    assert code == 0
    summary = json.loads((tmp_path / "s.csv.summary.json").read_text())
    assert summary["config"]["family"] == {"kind": "alpha", "alpha": 0.5}
    assert summary["config"]["k_grid"]["num"] == 4
    assert json.loads(err) == summary


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"family": {"kind": "decoupled"}, "k_grid": {"start": 1, "stop": 2, "num": 3}}))
    _, out, _ = run(capsys, "smatrix", "--quiet", "--config", str(cfg))
    data = np.array(rows(out)[1:], float)
    assert data.shape[0] == 3 and np.all(data[:, 1] == -1)
    _, out, _ = run(capsys, "smatrix", "--quiet", "--config", str(cfg), "--family", "kirchhoff")
    assert np.all(np.array(rows(out)[1:], float)[:, 1] == -1 / 3)


@pytest.mark.parametrize(
    "argv",
    [
        ["smatrix", "--k-min", "-1"],
        ["smatrix", "--k-min", "5", "--k-max", "1"],
        ["smatrix", "--family", "alpha"],
        ["smatrix", "--family", "lattice", "--delta", "1.0"],
        ["converge", "--deltas", "0.2", "0.1"],
        ["converge", "--k", "10"],
        ["simulate", "--dt", "1.0"],
        ["smatrix", "--no-such-flag"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv, "--quiet")
    assert code == 2


def test_missing_config_file(capsys, tmp_path):
    code, _, _ = run(capsys, "smatrix", "--config", str(tmp_path / "nope.json"))
    assert code == 2


def test_converge(capsys):
    code, out, _ = run(capsys, "converge", "--quiet")
    assert code == 0
    table = rows(out)
    assert ",".join(table[0]) == CONVERGE_HEADER
    errs = np.array([float(r[1]) for r in table[1:-1]])
    assert np.all(np.diff(errs) < 0)
    assert table[-1][0] == "fitted_order"
    assert float(table[-1][1]) == pytest.approx(1.0, abs=0.1)


def test_converge_matches_first_order_coefficient(capsys):
    _, out, _ = run(capsys, "converge", "--quiet", "--deltas", "0.1", "0.05", "0.025")
    for d, e, _ in rows(out)[1:-1]:
        assert float(e) == pytest.approx(float(d) / 9, rel=0.15)


@pytest.mark.parametrize("family,conserved", [("kirchhoff", "both"), ("alpha", "energy"), ("beta", "charge")])
def test_twomode(capsys, family, conserved):
    code, out, _ = run(capsys, "twomode", "--quiet", "--family", family, "--alpha", "1", "--beta", "1",
                       "--num-k", "8")
    assert code == 0
    table = rows(out)
    assert ",".join(table[0]) == TWOMODE_HEADER
    data = np.array(table[1:], float)
    assert data.shape == (28, 4)
    e, q = data[:, 2].max(), data[:, 3].max()
    if conserved in ("both", "energy"):
        assert e <= 1e-12
    if conserved in ("both", "charge"):
        assert q <= 1e-12
    if conserved == "energy":
        assert q > 1e-6
    if conserved == "charge":
        assert e > 1e-6


def test_simulate_small(capsys, tmp_path):
    out = tmp_path / "sim.csv"
    code, _, _ = run(capsys, "simulate", "--quiet", *SMALL_SIM, "--out", str(out))
    assert code == 0
    table = rows(out.read_text())
    assert ",".join(table[0]) == simulation_header(3)
    assert table[0][:3] == ["t", "E_total", "Q_total"] and table[0][-1] == "charge_balance"
    data = np.array(table[1:], float)
    assert np.ptp(data[:, 1]) / data[0, 1] <= 1e-6
    summary = json.loads((tmp_path / "sim.csv.summary.json").read_text())
    assert summary["relative_error_R2_lattice"] <= 0.02
    assert summary["config"]["packet"]["carrier_k"] == 3.0


def test_simulate_line_does_not_reflect(capsys, tmp_path):
    out = tmp_path / "line.csv"
    code, _, _ = run(capsys, "simulate", "--quiet", "--rays", "2", *SMALL_SIM, "--out", str(out))
    assert code == 0
    summary = json.loads((tmp_path / "line.csv.summary.json").read_text())
    assert summary["reflected_energy_fraction"] <= 1e-3


def test_simulate_invalid_experiment(capsys, tmp_path):
    cfg = tmp_path / "long.json"
    cfg.write_text(json.dumps({"stop": {"clearance": 20.0}}))
    code, _, err = run(capsys, "simulate", "--quiet", "--config", str(cfg), "--delta", "0.1", "--sites", "300",
                       "--dt", "0.025", "--carrier-k", "3.0", "--center", "15", "--width", "1.5")
    assert code == 3
    assert "experiment invalid" in err


def test_output_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["simulate", "--quiet", *SMALL_SIM, "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    _, first, _ = run(capsys, "twomode", "--quiet", "--family", "alpha", "--alpha", "0.3")
    _, second, _ = run(capsys, "twomode", "--quiet", "--family", "alpha", "--alpha", "0.3")
    assert first == second


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", "--seed", "1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[-1] == f"{len(lines) - 1}/{len(lines) - 1} checks passed"
    assert all(line.startswith("PASS") for line in lines[:-1])
    assert all("worst=" in line for line in lines[:-1])


def test_validate_flags_a_seeded_bug(capsys, monkeypatch):
    import starjunction.analytic_smatrix as an

    monkeypatch.setattr(an, "kirchhoff_reflection", lambda s: (2 - s) / s + 1e-3)
    code, out, _ = run(capsys, "validate")
    assert code == 4
    assert any(line.startswith("FAIL") and "kirchhoff_derivative_sum" in line for line in out.splitlines())
