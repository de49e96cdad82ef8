import csv
import json
import subprocess
import sys

import pytest

from spinqsd.cli import main


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_steady_to_stdout(capsys):
    assert main(["steady", "--j", "5", "--lambda", "0.5", "--observable", "mean_jz"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "j,lambda,omega_z,mean_jz_over_j,purity,spectral_gap"
    value = out[1].split(",")[3]
    assert len(value.replace(".", "").lstrip("0")) >= 15  # full precision


def test_steady_writes_csv_and_manifest(tmp_path):
    assert main(["steady", "--j", "3/2", "--lambda", "0", "--output-dir", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "steady.csv")
    assert float(rows[0]["mean_jz_over_j"]) == pytest.approx(1, abs=1e-12)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["command"] == "steady" and manifest["outputs"] == ["steady.csv"]


@pytest.mark.parametrize("argv", [
    ["steady", "--j", "0", "--lambda", "1"],
    ["steady", "--j", "1/3", "--lambda", "1"],
    ["steady", "--j", "3", "--lambda", "-1"],
    ["traj", "--j", "3", "--lambda", "1", "--kappa", "0"],
    ["figure", "--which", "7"],
    ["bogus"],
])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_memory_budget_exit_2(capsys):
    assert main(["steady", "--j", "2000", "--lambda", "1"]) == 2
    assert "budget" in capsys.readouterr().err


def test_invalid_runtime_parameters_exit_2():
    assert main(["traj", "--j", "3", "--lambda", "1", "--dt", "5"]) == 2
    assert main(["traj", "--j", "3", "--lambda", "1", "--start", "xyz"]) == 2


def test_solver_failure_exit_3(monkeypatch, capsys):
    import spinqsd.liouvillian as lv
    from spinqsd.errors import NonConvergence

    def fail(*a, **k):
        raise NonConvergence("inverse iteration residual too large")

    monkeypatch.setattr(lv, "steady_state", fail)
    monkeypatch.setattr("spinqsd.experiments.steady_state", fail)
    assert main(["steady", "--j", "3", "--lambda", "1"]) == 3
    assert "inverse iteration" in capsys.readouterr().err


def test_blowup_exit_4(monkeypatch, capsys):
    import numpy as np

    import spinqsd.qsd as q

    real = q._em_step

    def bad(z, south, *a, **k):
        z, south = real(z, south, *a, **k)
        return np.full_like(z, np.nan), south

    monkeypatch.setattr(q, "_em_step", bad)
    assert main(["traj", "--j", "3", "--lambda", "1", "--t-final", "0.1", "--n-traj", "2"]) == 4
    err = capsys.readouterr().err
    assert "trajectory 0" in err and "t=" in err


def test_traj_replay_is_bit_exact(tmp_path):
    first = tmp_path / "a"
    argv = ["traj", "--j", "20", "--lambda", "1.2", "--n-traj", "3", "--t-final", "2", "--samples", "5",
            "--seed", "9", "--start", "0.1+0.2i", "--output-dir", str(first)]
    assert main(argv) == 0
    assert main(["replay", str(first / "manifest.json"), "--output-dir", str(tmp_path / "b")]) == 0
    assert (first / "traj.csv").read_bytes() == (tmp_path / "b" / "traj.csv").read_bytes()
    rows = _rows(first / "traj.csv")
    assert len(rows) == 15 and set(rows[0]) == {"traj_id", "t", "nx", "ny", "nz", "chart", "z_re", "z_im"}


def test_threads_do_not_change_output(tmp_path, monkeypatch):
    base = ["traj", "--j", "20", "--lambda", "0.8", "--n-traj", "5", "--t-final", "1", "--samples", "3"]
    assert main(base + ["--output-dir", str(tmp_path / "a"), "--threads", "1"]) == 0
    monkeypatch.setenv("SPINQSD_THREADS", "4")
    assert main(base + ["--output-dir", str(tmp_path / "b"), "--threads", "2"]) == 0
    assert (tmp_path / "a" / "traj.csv").read_bytes() == (tmp_path / "b" / "traj.csv").read_bytes()


def test_flow_output(capsys):
    assert main(["flow", "--lambda", "1.05", "--n-init", "2", "--samples", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "lambda,track_id,t,nx,ny,nz" and len(lines) == 7


def test_figure_4b(tmp_path):
    assert main(["figure", "--which", "4b", "--output-dir", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "fig4b.csv")
    assert len(rows) == 49
    assert json.loads((tmp_path / "manifest.json").read_text())["config"]["which"] == "4b"


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "spinqsd.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "0.1.0" in proc.stdout
