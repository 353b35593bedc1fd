import filecmp
import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from ghd.cli import main

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"


def _write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def _small_zero_config(**extra):
    cfg = {
        "grid": {"p_min": -3.0, "p_max": 3.0, "count": 24},
        "kernel": {"model": "zero"},
        "scenario": {"kind": "gaussian_bump", "a": 0.5, "sigma": 0.6,
                     "gamma": 1.0},
        "seed_grid": {"x_min": -6.0, "x_max": 6.0, "count": 200},
        "solve": {"times": [0.5], "x_min": -3.0, "x_max": 3.0, "x_count": 40},
    }
    cfg.update(extra)
    return cfg


def _small_ll_config(**extra):
    cfg = {
        "grid": {"p_min": -4.0, "p_max": 4.0, "count": 24},
        "kernel": {"model": "lieb_liniger", "c": 1.0},
        "scenario": {"kind": "gaussian_bump", "a": 0.5, "sigma": 0.8,
                     "gamma": 1.0},
        "seed_grid": {"x_min": -8.0, "x_max": 8.0, "count": 300},
        "solve": {"times": [0.0, 0.4], "x_min": -3.0, "x_max": 3.0,
                  "x_count": 30},
    }
    cfg.update(extra)
    return cfg


def _read_csv(path):
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return header, data


def test_check_bundled_fixture_passes(tmp_path):
    rc = main(["check", "--config", str(CONFIGS / "lieb_liniger_gaussian.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    payload = json.loads((tmp_path / "assumptions.json").read_text())
    assert payload["verdict"] == "pass"
    assert payload["threshold_used"] == 1.0


def test_check_failing_scenario_exit3(tmp_path):
    cfg = _small_ll_config()
    cfg["scenario"] = {"kind": "gaussian_bump", "a": 3.0, "sigma": 1.0,
                      "gamma": 0.05}
    rc = main(["check", "--config", _write(tmp_path, "bad.json", cfg),
               "--out", str(tmp_path)])
    assert rc == 3
    payload = json.loads((tmp_path / "assumptions.json").read_text())
    assert payload["verdict"] == "fail"


def test_schema_violation_exit2(tmp_path, capsys):
    cfg = _small_zero_config()
    cfg["grid"]["count"] = 1
    rc = main(["check", "--config", _write(tmp_path, "bad.json", cfg),
               "--out", str(tmp_path)])
    assert rc == 2
    assert "$.grid.count" in capsys.readouterr().err


def test_unknown_key_exit2(tmp_path, capsys):
    cfg = _small_zero_config()
    cfg["grd"] = {}
    rc = main(["check", "--config", _write(tmp_path, "bad.json", cfg),
               "--out", str(tmp_path)])
    assert rc == 2
    assert "grd" in capsys.readouterr().err


def test_missing_config_exit2(tmp_path):
    rc = main(["check", "--config", str(tmp_path / "absent.json"),
               "--out", str(tmp_path)])
    assert rc == 2


def test_convergence_failure_exit4(tmp_path):
    cfg = _small_ll_config(solver={"fp_tol": 1e-12, "max_iters": 1})
    rc = main(["solve", "--config", _write(tmp_path, "cfg.json", cfg),
               "--out", str(tmp_path)])
    assert rc == 4


def test_solve_zero_kernel_matches_shifted_input(tmp_path):
    cfg = _small_zero_config()
    rc = main(["solve", "--config", _write(tmp_path, "cfg.json", cfg),
               "--out", str(tmp_path)])
    assert rc == 0
    header, data = _read_csv(tmp_path / "solve.csv")
    cols = {name: data[:, i] for i, name in enumerate(header)}
    expect = 0.5 * np.exp(-0.5 * ((cols["x"] - cols["p"] * cols["t"]) / 0.6) ** 2) \
        * np.exp(-cols["p"] ** 2)
    assert np.max(np.abs(cols["n"] - expect)) <= 1e-9
    assert np.max(np.abs(cols["u"] - (cols["x"] - cols["p"] * cols["t"]))) <= 1e-9


def test_solve_deterministic_bytes(tmp_path):
    cfg = _write(tmp_path, "cfg.json", _small_ll_config())
    for sub in ("a", "b"):
        assert main(["solve", "--config", cfg,
                     "--out", str(tmp_path / sub)]) == 0
    assert filecmp.cmp(tmp_path / "a" / "solve.csv",
                       tmp_path / "b" / "solve.csv", shallow=False)


def test_workers_do_not_change_output(tmp_path):
    cfg = _write(tmp_path, "cfg.json", _small_ll_config())
    assert main(["solve", "--config", cfg, "--workers", "1",
                 "--out", str(tmp_path / "w1")]) == 0
    assert main(["solve", "--config", cfg, "--workers", "2",
                 "--out", str(tmp_path / "w2")]) == 0
    assert filecmp.cmp(tmp_path / "w1" / "solve.csv",
                       tmp_path / "w2" / "solve.csv", shallow=False)


def test_seed_outputs(tmp_path):
    cfg = _write(tmp_path, "cfg.json", _small_ll_config())
    rc = main(["seed", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 0
    summary = json.loads((tmp_path / "seed_summary.json").read_text())
    assert summary["interpolation"] in ("hermite", "linear")
    assert 0 < summary["contraction_rate"] < 1
    lines = (tmp_path / "seed_tables.csv").read_text().strip().splitlines()
    assert lines[0] == "x,p,Xhat0,B,one_dr,n_one_dr"
    assert len(lines) == 1 + summary["x_count"] * 24


def test_conserve_outputs(tmp_path):
    cfg = _small_ll_config(conserve={
        "times": [0.0, 0.5], "x_min": -9.0, "x_max": 9.0, "x_count": 201,
        "charges": ["one", "momentum"], "entropies": ["fermi_entropy"]})
    rc = main(["conserve", "--config", _write(tmp_path, "cfg.json", cfg),
               "--out", str(tmp_path)])
    assert rc == 0
    for tag in ("Q_one", "Q_momentum", "S_fermi_entropy"):
        header, data = _read_csv(tmp_path / f"conserve_{tag}.csv")
        assert header == ["t", "value", "drift"]
        assert data.shape == (2, 3)
    summary = json.loads((tmp_path / "conserve_summary.json").read_text())
    assert summary["Q[one]"]["relative_drift"] <= 1e-6


def test_weakcheck_partitioning_fixture(tmp_path):
    cfg = json.loads((CONFIGS / "partitioning_lieb_liniger.json").read_text())
    cfg["grid"]["count"] = 40
    cfg["weakcheck"]["random"]["count"] = 2
    cfg["weakcheck"]["edge_points"] = 96
    rc = main(["weakcheck", "--config", _write(tmp_path, "cfg.json", cfg),
               "--out", str(tmp_path)])
    assert rc == 0
    header, data = _read_csv(tmp_path / "weakcheck.csv")
    assert np.max(np.abs(data[:, header.index("residual")])) <= 1e-4


def test_weakcheck_exit1_when_above_tolerance(tmp_path):
    cfg = json.loads((CONFIGS / "partitioning_lieb_liniger.json").read_text())
    cfg["grid"]["count"] = 32
    cfg["weakcheck"] = {"rectangles": [[-0.5, 0.5, 0.1, 0.6]],
                        "p_indices": [16], "edge_points": 64,
                        "tolerance": 1e-18}
    rc = main(["weakcheck", "--config", _write(tmp_path, "cfg.json", cfg),
               "--out", str(tmp_path)])
    assert rc == 1


def test_compare_reference_smoke(tmp_path):
    rc = main(["compare-reference",
               "--config", str(CONFIGS / "compare_reference.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    summary = json.loads((tmp_path / "compare_summary.json").read_text())
    assert len(summary["l1_gap"]) == 2
    assert summary["l1_gap"][1] < summary["l1_gap"][0]
    assert summary["order"] is not None


def test_plotdata_outputs(tmp_path):
    cfg = _small_ll_config(plotdata={"times": [0.0, 0.3], "x_min": -3.0,
                                     "x_max": 3.0, "x_count": 41})
    rc = main(["plotdata", "--config", _write(tmp_path, "cfg.json", cfg),
               "--out", str(tmp_path)])
    assert rc == 0
    files = sorted(tmp_path.glob("profile_t*.dat"))
    assert len(files) == 2
    first = files[0].read_text().splitlines()
    assert first[0].startswith("# t = ")
    assert len(first) == 2 + 41


def test_console_entry_point_subprocess(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "ghd.cli", "check",
         "--config", str(CONFIGS / "zero_kernel_gaussian.json"),
         "--out", str(tmp_path)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "pass" in proc.stdout


def test_tabulated_kernel_and_scenario_from_csv(tmp_path):
    (tmp_path / "kernel.csv").write_text(
        "pq,-3.0,0.0,3.0\n-3.0,0.05,0.02,0.01\n0.0,0.02,0.08,0.02\n3.0,0.01,0.02,0.05\n")
    (tmp_path / "scenario.csv").write_text(
        "xp,-3.0,0.0,3.0\n-2.0,0.0,0.05,0.0\n0.0,0.05,0.3,0.05\n2.0,0.0,0.05,0.0\n")
    cfg = {
        "grid": {"p_min": -3.0, "p_max": 3.0, "count": 16},
        "kernel": {"model": "tabulated", "csv": "kernel.csv"},
        "scenario": {"kind": "tabulated_xy", "csv": "scenario.csv"},
        "seed_grid": {"x_min": -3.0, "x_max": 3.0, "count": 120},
        "solve": {"times": [0.2], "x_min": -2.0, "x_max": 2.0, "x_count": 15},
    }
    path = _write(tmp_path, "cfg.json", cfg)
    assert main(["check", "--config", path, "--out", str(tmp_path)]) == 0
    assert main(["solve", "--config", path, "--out", str(tmp_path)]) == 0
    header, data = _read_csv(tmp_path / "solve.csv")
    assert data.shape[0] == 15 * 16


def test_missing_command_section_exit2(tmp_path):
    cfg = _small_zero_config()
    del cfg["solve"]
    rc = main(["solve", "--config", _write(tmp_path, "cfg.json", cfg),
               "--out", str(tmp_path)])
    assert rc == 2
