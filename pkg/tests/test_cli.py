import csv
import subprocess
import sys

import pytest

from mondeq.cli import main
from mondeq.io import read_snapshot


def _rows(path):
    with open(path) as fh:
        return [r for r in csv.reader(fh) if r and not r[0].startswith("#")]


def _run(tmp_path, *argv):
    return main(["--out", str(tmp_path), "--no-timestamp", *argv])


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    assert main(["--out", str(out), "--no-timestamp", "solve", "--central", "0.001"]) == 0
    return out


def test_mass_curve_outputs(tmp_path):
    assert _run(tmp_path, "mass-curve", "--s-min", "1e-4", "--s-max", "1e-2", "--points", "6") == 0
    rows = _rows(tmp_path / "mass_curve.csv")
    assert rows[0] == ["s", "M_s", "R_s"] and len(rows) == 7
    masses = [float(r[1]) for r in rows[1:]]
    assert masses == sorted(masses)
    fits = _rows(tmp_path / "fits.csv")
    assert fits[1][0] == "deep" and abs(float(fits[1][4]) - 2.0) < 0.02


@pytest.mark.parametrize("argv", [
    ["mass-curve", "--points", "1"],
    ["mass-curve", "--s-min", "0"],
    ["mass-curve", "--s-min", "1", "--s-max", "0.1"],
    ["solve", "--mass", "0"],
    ["solve"],
    ["solve", "--mass", "1", "--central", "1"],
    ["perturb", "--eps", "0.5"],
    ["verify", "nonsense"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(tmp_path, argv):
    assert _run(tmp_path, *argv) == 2


def test_bad_config_exit_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("lambda.family = cubic\n")
    assert main(["--config", str(cfg), "solve", "--central", "1"]) == 2


def test_solve_writes_snapshot_and_energies(solved, capsys):
    model = read_snapshot(solved / "model.snapshot")
    assert model.total_mass == pytest.approx(1.06e-6, rel=0.06)
    names = [r[0] for r in _rows(solved / "energies.csv")[1:]]
    assert "epot_newton" in names and "casimir" in names


def test_solve_mass_roundtrip(solved, tmp_path):
    m = read_snapshot(solved / "model.snapshot")
    assert _run(tmp_path, "solve", "--mass", repr(m.total_mass)) == 0
    back = read_snapshot(tmp_path / "model.snapshot")
    assert back.central_value == pytest.approx(1e-3, rel=1e-6)


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert _run(d, "solve", "--central", "0.3") == 0
    for name in ("model.snapshot", "energies.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_global_flags_after_command(tmp_path):
    assert main(["solve", "--central", "0.2", "--out", str(tmp_path), "--no-timestamp"]) == 0
    assert not (tmp_path / "energies.csv").read_text().startswith("#")


def test_energies_command(solved, tmp_path):
    snap = str(solved / "model.snapshot")
    assert _run(tmp_path, "energies", "--snapshot", snap, "--baseline", snap) == 0
    rows = dict(_rows(tmp_path / "energies.csv")[1:])
    assert float(rows["grad_l2_dev"]) == 0.0


def test_corrupted_snapshot_exit_2(solved, tmp_path):
    bad = tmp_path / "bad.snapshot"
    bad.write_text((solved / "model.snapshot").read_text().replace("# mond-equilib v1", "# nope"))
    assert _run(tmp_path, "energies", "--snapshot", str(bad)) == 2
    assert _run(tmp_path, "verify", "potential", "--snapshot", str(bad)) == 2


def test_verify_potential_table(tmp_path, capsys):
    assert _run(tmp_path, "verify", "potential") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "check,status,value,tolerance"
    names = [r[0] for r in _rows(tmp_path / "verify.csv")[1:]]
    assert sum(n.startswith("qumond_direct_vs_radial") for n in names) == 3
    assert all(r[1] == "pass" for r in _rows(tmp_path / "verify.csv")[1:])


def test_lift_command(tmp_path):
    assert _run(tmp_path, "lift", "--mass", "1", "--resolution", "1000") == 0
    rows = dict(_rows(tmp_path / "lift.csv")[1:])
    assert float(rows["n_fit"]) == pytest.approx(2.0, abs=1e-3)
    assert float(rows["h_rel_diff"]) < 1e-5


def test_perturb_command(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("ansatz.kind = kinetic\nansatz.exponent = 0.5\nansatz.coefficient = 1\n")
    assert _run(tmp_path, "--config", str(cfg), "perturb", "--eps", "0.01", "--t-end", "0.5",
                "--shells", "3000") == 0
    diag = _rows(tmp_path / "diagnostics.csv")
    assert diag[0] == ["t", "d_fluid", "grad_l2_dev", "grad_l32_dev", "energy", "virial"]
    assert len(diag) == 4
    summary = dict(_rows(tmp_path / "summary.csv")[1:])
    assert float(summary["max_energy_drift"]) < 1e-3


def test_module_entry_point_version():
    res = subprocess.run([sys.executable, "-m", "mondeq", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("mondeq ")
