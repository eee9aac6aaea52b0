import json
import math

import numpy as np
import pandas as pd
import pytest

from spinphase import SpinPhaseService
from spinphase.core.errors import ConfigError
from spinphase.core.scenario import load_scenario
from spinphase.services.service import get_service, run_evolve
from spinphase.utils.export import dumps, to_jsonable, write_csv

SCENARIO = """
    [scenario]
    name = svc

    [drive]
    kind = constant
    omega0 = 1.0
    theta0 = pi/3

    [initial]
    invariant = aligned_mode

    [time]
    periods = 1
    nodes = 101

    [tolerances]
    atol = 1e-12
    substeps = 16
"""


def test_tol_overrides_integrator_tolerance(write_config):
    cfg = load_scenario(write_config(SCENARIO))
    assert SpinPhaseService(tol=1e-6)._tolerances(cfg) == (1e-6, 1e-12)
    assert SpinPhaseService(tol=1e-11)._tolerances(cfg) == (1e-11, pytest.approx(1e-13))
    assert SpinPhaseService()._tolerances(cfg) == (cfg.rtol, cfg.atol)


def test_get_service_is_shared_unless_configured(tmp_path):
    assert get_service() is get_service()
    fresh = get_service(output_dir=tmp_path)
    assert fresh.output_dir == tmp_path
    assert get_service() is fresh


def test_run_evolve_aligned_constant_drive(write_config, tmp_path):
    cfg = load_scenario(write_config(SCENARIO))
    outcome = SpinPhaseService(output_dir=tmp_path, progress=False).run_evolve(cfg)
    assert outcome.exit_code == 0
    assert [p.name for p in outcome.paths] == ["svc_trajectory.csv", "svc_direct.csv", "svc_summary.json"]
    summary = outcome.summary
    # axis along the drive: f = 1 and only the dynamical phase -omega0 t accumulates per branch
    assert summary["f_max_abs"] == pytest.approx(1.0)
    assert summary["dphi_geometric"] == pytest.approx(0.0, abs=1e-9)
    assert summary["dphi_dynamical"] == pytest.approx(-2.0 * math.pi, abs=1e-8)
    assert summary["dphi_observed_direct"] == pytest.approx(summary["dphi_total"], abs=1e-6)


def test_run_field_needs_field_section(write_config, tmp_path):
    cfg = load_scenario(write_config(SCENARIO))
    with pytest.raises(ConfigError) as err:
        SpinPhaseService(output_dir=tmp_path).run_field(cfg)
    assert err.value.key == "field"


def test_run_sweep_rejects_sampled_drive(write_config, tmp_path):
    (tmp_path / "drive.csv").write_text("t,omega0,theta,phi\n0,1,0.5,0\n10,1,0.5,1\n")
    cfg = load_scenario(write_config("""
        [drive]
        kind = sampled
        table = drive.csv

        [time]
        t_end = 5
        nodes = 11

        [sweep]
        parameter = nu
        values = 0.1
    """))
    with pytest.raises(ConfigError):
        SpinPhaseService(output_dir=tmp_path, progress=False).run_sweep(cfg)


def test_json_export_is_strict_and_stable():
    payload = {"a": np.float64(1.5), "b": float("nan"), "c": np.arange(2), "d": np.bool_(True)}
    assert to_jsonable(payload) == {"a": 1.5, "b": None, "c": [0, 1], "d": True}
    text = dumps(payload)
    assert text.endswith("}\n")
    assert json.loads(text)["b"] is None


def test_csv_export_round_trips_doubles(tmp_path):
    df = pd.DataFrame({"x": [0.1, 1.0 / 3.0, math.pi]})
    path = write_csv(df, tmp_path / "nested" / "x.csv")
    back = pd.read_csv(path, float_precision="round_trip")
    assert back["x"].tolist() == df["x"].tolist()
    assert b"\r\n" not in path.read_bytes()


def test_module_wrapper_uses_default_output_dir(write_config, tmp_path, monkeypatch):
    monkeypatch.setattr("spinphase.core.scenario.OUTPUT_DIR", tmp_path / "default_out")
    path = write_config(SCENARIO)
    get_service(progress=False)
    outcome = run_evolve(path)
    assert outcome.exit_code == 0
    assert (tmp_path / "default_out" / "svc_summary.json").exists()


FIELD = """
    [scenario]
    name = fast

    [field]
    omega = 1e-4
    v = {v}

    [grid]
    r_min = 1
    r_max = 4
    n_r = 3
    theta_min = 0.5
    theta_max = 1.5
    n_theta = 3
"""


@pytest.mark.parametrize("v, valid, warnings", [(10.0, False, 1), (0.0, True, 0)])
def test_field_run_checks_frame_validity_once(write_config, tmp_path, caplog, v, valid, warnings):
    cfg = load_scenario(write_config(FIELD.format(v=v)))
    with caplog.at_level("WARNING"):
        outcome = SpinPhaseService(output_dir=tmp_path, progress=False, n_jobs=1).run_field(cfg)
    assert outcome.exit_code == 0
    assert outcome.summary["frame_expansion_valid"] is valid
    assert caplog.text.count("Radial speed") == warnings


def test_berry_sweep_needs_decreasing_rates(write_config, tmp_path):
    cfg = load_scenario(write_config("""
        [drive]
        kind = conical
        omega0 = 1.0
        theta0 = pi/2
        nu = 0.01

        [sweep]
        parameter = nu
        values = 0.01, 0.02
        study = berry
    """))
    out = tmp_path / "out"
    with pytest.raises(ConfigError) as err:
        SpinPhaseService(output_dir=out, progress=False).run_sweep(cfg)
    assert err.value.key == "sweep.values"
    assert not out.exists()
