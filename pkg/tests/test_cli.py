import json
import math

import pandas as pd
import pytest

from spinphase.cli.main import cmd_evolve, cmd_field, cmd_sweep, main
from spinphase.core.config import CONFIGS_DIR
from spinphase.physics.analysis import berry_limit_check
from spinphase.physics.drive import DriveSpec
from spinphase.services.service import SpinPhaseService


def _summary(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_field_frame_only(tmp_path):
    code = main(["field", str(CONFIGS_DIR / "field_frame.ini"), "--out", str(tmp_path), "--quiet"])
    assert code == 0
    summary = _summary(tmp_path / "field_frame_summary.json")
    assert summary["frame_field_max_deviation"] <= 1e-10
    assert summary["dipole_amplitude"] is None
    assert summary["cross_term_max_rel_error"] == pytest.approx(0.0, abs=1e-12)
    df = pd.read_csv(tmp_path / "field_frame_field.csv")
    assert len(df) == summary["grid_points"] == 54


def test_field_earth_spin_falloff(tmp_path):
    code = main(["field", str(CONFIGS_DIR / "field_kerr.ini"), "--out", str(tmp_path), "--quiet"])
    assert code == 0
    summary = _summary(tmp_path / "field_kerr_summary.json")
    assert summary["falloff_exponent"] == pytest.approx(3.0, abs=0.01)
    assert summary["dipole_constant"] == pytest.approx(summary["dipole_expected_constant"], rel=1e-6)
    assert summary["dipole_quoted_ratio"] == pytest.approx(5.9722e24 / 2.0, rel=1e-6)


def test_field_without_grid_is_a_config_error(write_config, tmp_path, capsys):
    path = write_config("[field]\nomega = 1e-4\n")
    assert main(["field", str(path), "--out", str(tmp_path)]) == 2
    assert "grid" in capsys.readouterr().err


def test_constant_axis_geometric_phase(tmp_path):
    code = main(["evolve", str(CONFIGS_DIR / "constant_axis.ini"), "--out", str(tmp_path), "--quiet"])
    assert code == 0
    summary = _summary(tmp_path / "constant_axis_summary.json")
    assert summary["dphi_geometric"] == pytest.approx(-math.pi, abs=1e-8)
    assert summary["min_fidelity"] >= 1.0 - 1e-8
    assert list(summary)[:6] == ["scenario", "min_fidelity", "dphi_geometric", "dphi_dynamical",
                                 "dphi_total", "f_max_abs"]
    traj = pd.read_csv(tmp_path / "constant_axis_trajectory.csv")
    direct = pd.read_csv(tmp_path / "constant_axis_direct.csv")
    assert len(traj) == len(direct) == 401


@pytest.mark.parametrize("name", ["modulated", "sampled"])
def test_time_dependent_drives_match_direct_integration(tmp_path, name):
    code = main(["evolve", str(CONFIGS_DIR / f"{name}.ini"), "--out", str(tmp_path), "--quiet"])
    assert code == 0
    summary = _summary(tmp_path / f"{name}_summary.json")
    assert summary["min_fidelity"] >= 1.0 - 1e-8


def test_coarse_grid_fails_validation(tmp_path):
    code = main(["evolve", str(CONFIGS_DIR / "coarse_grid.ini"), "--out", str(tmp_path), "--quiet"])
    assert code == 3
    assert (tmp_path / "coarse_grid_summary.json").exists()


def test_evolve_is_deterministic(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        assert main(["evolve", str(CONFIGS_DIR / "constant_axis.ini"), "--out", str(out), "--quiet"]) == 0
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_bad_tolerance_and_missing_file(tmp_path):
    cfg = str(CONFIGS_DIR / "constant_axis.ini")
    assert main(["evolve", cfg, "--out", str(tmp_path), "--tol", "-1", "--quiet"]) == 2
    assert main(["evolve", str(tmp_path / "none.ini"), "--out", str(tmp_path), "--quiet"]) == 2


def test_sweep_with_empty_values(write_config, tmp_path):
    path = write_config("""
        [drive]
        kind = conical
        omega0 = 1
        theta0 = pi/4
        nu = 0.1

        [time]
        periods = 1
        nodes = 51

        [sweep]
        parameter = nu
        values =
    """)
    assert main(["sweep", str(path), "--out", str(tmp_path), "--quiet"]) == 2


def test_berry_sweep_deviation_decreases(write_config, tmp_path):
    path = write_config("""
        [scenario]
        name = berry

        [drive]
        kind = conical
        omega0 = 1.0
        theta0 = pi/2
        nu = 0.04

        [tolerances]
        substeps = 8
        fidelity_threshold = 0.999999

        [sweep]
        parameter = nu
        values = 0.04, 0.02, 0.01
        study = berry
        nodes_per_period = 32
    """)
    assert main(["sweep", str(path), "--out", str(tmp_path), "--quiet"]) == 0
    summary = _summary(tmp_path / "berry_sweep_summary.json")
    assert summary["deviation_monotone"] is True
    assert summary["expected_geometric_up"] == pytest.approx(-math.pi)
    assert 0.8 <= summary["convergence_exponent"] <= 1.2
    table = pd.read_csv(tmp_path / "berry_sweep.csv")
    assert list(table["status"]) == ["ok"] * 3
    assert (tmp_path / "berry_002_summary.json").exists()
    assert 0.99 <= summary["convergence_r_squared"] <= 1.0
    reference = berry_limit_check(DriveSpec.conical(1.0, math.pi / 2, nu=0.04), [0.04, 0.02, 0.01],
                                  nodes_per_period=32)
    assert list(table["deviation"]) == pytest.approx(list(reference.table["deviation"]), rel=1e-6)
    assert summary["convergence_exponent"] == pytest.approx(reference.exponent, rel=1e-6)


def test_response_sweep_is_linear(write_config, tmp_path):
    path = write_config("""
        [scenario]
        name = response

        [drive]
        kind = modulated
        omega0 = 1.0
        theta0 = pi/4
        nu = 0.3
        epsilon = 0.0
        nu_m = 0.45

        [time]
        periods = 4
        nodes = 401

        [tolerances]
        substeps = 8

        [sweep]
        parameter = epsilon
        values = 1e-3, 2e-3, 4e-3
        study = response
    """)
    assert main(["sweep", str(path), "--out", str(tmp_path), "--quiet"]) == 0
    summary = _summary(tmp_path / "response_sweep_summary.json")
    assert summary["response_exponent"] == pytest.approx(1.0, abs=0.1)
    assert summary["response_r_squared"] >= 0.99
    table = pd.read_csv(tmp_path / "response_sweep.csv")
    assert "shift" in table.columns
    assert (tmp_path / "response_baseline_summary.json").exists()


def test_subcommand_entry_points(tmp_path):
    service = SpinPhaseService(output_dir=tmp_path, progress=False)
    assert cmd_evolve(CONFIGS_DIR / "coarse_grid.ini", service) == 3
    assert cmd_field(CONFIGS_DIR / "constant_axis.ini", service) == 2
    assert cmd_sweep(tmp_path / "missing.ini", service) == 2
