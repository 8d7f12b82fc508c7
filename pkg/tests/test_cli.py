import json
import math
import subprocess
import sys

import numpy as np
import pytest

from clockfds.cli import main
from clockfds.io import append_records
from clockfds.observables import ObservableRecord
from clockfds.rgflow import xi_prediction


def run_cli(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_usage_error_is_json(capsys):
    rc, out, err = run_cli(capsys, "rg", "--u0", "0.1")
    assert rc == 2 and out == ""
    doc = json.loads(err)
    assert doc["error"] == "usage"


def test_value_error_is_json(capsys):
    rc, _, err = run_cli(capsys, "oracle", "--N", "2", "--beta", "-1", "--lattice", "2x2")
    assert rc == 2
    assert json.loads(err)["error"] == "ValueError"
    rc, _, err = run_cli(capsys, "oracle", "--N", "2", "--beta", "0.5", "--lattice", "2by2")
    assert rc == 2 and "lattice" in json.loads(err)["message"]


def test_missing_results_file(capsys, tmp_path):
    rc, _, err = run_cli(capsys, "extrapolate", "--results", str(tmp_path / "nothing.csv"))
    assert rc == 2 and "not found" in json.loads(err)["message"]


def test_rg(capsys, tmp_path):
    traj = tmp_path / "traj.csv"
    rc, out, _ = run_cli(capsys, "rg", "--u0", "0.01", "--d0", "0.0", "--out", str(traj))
    assert rc == 0
    doc = json.loads(out)
    assert doc["C"] == pytest.approx(1e-4)
    assert doc["l_star_asymptotic"] == pytest.approx(math.pi / 4 / 0.01, rel=1e-12)
    assert doc["l_star"] < doc["l_star_asymptotic"]
    assert doc["terminated"] == "uReachedOne"
    assert np.loadtxt(traj, delimiter=",", skiprows=1).shape[1] == 5


def test_oracle(capsys):
    rc, out, _ = run_cli(capsys, "oracle", "--N", "2", "--beta", "0.3", "--lattice", "2x2", "--strip", "10,12,14")
    assert rc == 0
    doc = json.loads(out)
    assert doc["strip"]["f_extrapolated"] == pytest.approx(doc["ising_f"], abs=1e-6)
    assert doc["ising_M"] == 0.0
    assert math.isfinite(doc["logZ"])


def test_lgt_verify(capsys):
    rc, out, _ = run_cli(capsys, "lgt-verify", "--N", "3", "--beta", "0.5")
    assert rc == 0
    doc = json.loads(out)
    assert doc["pass"] is True


def synthetic_results(path, temps):
    recs = []
    for N, TL in temps.items():
        for t in (-0.3, -0.25, -0.2, -0.15, -0.12, -0.1):
            T = TL * (1 + t)
            xi = math.exp(float(xi_prediction(t, N)))
            for chi in (70, 96, 128):
                recs.append(ObservableRecord(N=N, T=T, beta=1 / T, chi=chi, h=0.0, M=0.9, xi=xi * (1 - 0.1 / chi),
                                             f=-2.0, converged=True, run_id=f"N{N}_{T}_{chi}", config_hash="h"))
    append_records(path, recs)


def test_extrapolate_and_fit(capsys, tmp_path):
    res = tmp_path / "results.csv"
    synthetic_results(res, {6: 0.69, 7: 0.53})
    rc, out, _ = run_cli(capsys, "extrapolate", "--results", str(tmp_path))
    assert rc == 0 and len(json.loads(out)["results"]) == 12
    rc, out, _ = run_cli(capsys, "fit-xi", "--results", str(res), "--critical-temps", "6:0.69,7:0.53")
    assert rc == 0
    doc = json.loads(out)
    assert doc["a"] == pytest.approx(1.5, abs=1e-6) and doc["b"] == pytest.approx(1.0, abs=1e-6)
    rc, _, err = run_cli(capsys, "fit-xi", "--results", str(res))
    assert rc == 2 and "critical temperatures" in json.loads(err)["message"]
    rc, _, err = run_cli(capsys, "fit-xi", "--results", str(res), "--critical-temps", "6=0.69")
    assert rc == 2


def test_collapse_ansatz_n(capsys, tmp_path):
    res = tmp_path / "results.csv"
    synthetic_results(res, {6: 0.69, 7: 0.53})
    pts = tmp_path / "pts.csv"
    rc, out, _ = run_cli(capsys, "collapse", "ansatz-n", "--results", str(res),
                         "--critical-temps", "6:0.69,7:0.53", "--points-out", str(pts))
    assert rc == 0
    assert json.loads(out)["n_points"] == 12
    assert pts.exists()


def test_sweep_command(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('[sweep]\nN = [2]\nT = [3.0]\nchi = [4]\n[ctmrg]\nmax_iters = 300\n')
    rc, out, _ = run_cli(capsys, "sweep", str(cfg), "--output-dir", str(tmp_path / "o"))
    assert rc == 0 and json.loads(out)["points_computed"] == 1
    rc, out, _ = run_cli(capsys, "sweep", str(cfg), "--output-dir", str(tmp_path / "o"))
    assert json.loads(out)["points_computed"] == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "clockfds", "rg", "--u0", "0.1", "--d0", "0.05"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["C"] == pytest.approx(0.0075)
