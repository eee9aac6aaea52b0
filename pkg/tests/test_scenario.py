import math
import textwrap

import numpy as np
import pytest

from spinphase.core.config import CONFIGS_DIR
from spinphase.core.errors import ConfigError
from spinphase.core.scenario import load_scenario

EVOLVE = textwrap.dedent("""
    [scenario]
    name = cone

    [drive]
    kind = conical
    omega0 = 2.0
    theta0 = pi/4
    nu = 0.3

    [initial]
    invariant = paper_mode
    c_up = 3, 0
    c_down = 0, 4

    [time]
    periods = 2
    nodes = 101
""").lstrip()


def test_evolve_scenario_is_parsed(write_config):
    cfg = load_scenario(write_config(EVOLVE))
    assert cfg.name == "cone"
    assert cfg.drive.kind == "conical"
    assert cfg.drive.theta0 == pytest.approx(math.pi / 4)
    assert cfg.drive.nu == 0.3
    assert cfg.t_end == pytest.approx(2.0 * math.pi)
    assert cfg.nodes == 101
    assert cfg.psi0 == pytest.approx(np.array([0.6, 0.8j]))
    assert cfg.sweep is None and cfg.grid is None


def test_name_defaults_to_file_stem(write_config):
    cfg = load_scenario(write_config(EVOLVE.replace("name = cone", ""), name="my_run.ini"))
    assert cfg.name == "my_run"


@pytest.mark.parametrize("text, value", [("pi", math.pi), ("-pi/2", -math.pi / 2),
                                         ("0.5*pi", 0.5 * math.pi), ("1.25", 1.25)])
def test_angle_expressions(write_config, text, value):
    cfg = load_scenario(write_config(EVOLVE.replace("theta0 = pi/4", "theta0 = 0.5").replace(
        "nu = 0.3", f"nu = 0.3\nphi0 = {text}")))
    assert cfg.drive.phi0 == pytest.approx(value)


def test_missing_key_names_section_and_line(write_config):
    path = write_config(EVOLVE.replace("omega0 = 2.0\n", ""))
    with pytest.raises(ConfigError) as err:
        load_scenario(path)
    assert err.value.key == "drive.omega0"
    assert err.value.line == 4
    assert f"{path}:4:" in str(err.value)


def test_invalid_value_points_at_its_line(write_config):
    with pytest.raises(ConfigError) as err:
        load_scenario(write_config(EVOLVE.replace("theta0 = pi/4", "theta0 = 4.0")))
    assert err.value.key == "drive.theta0"
    assert err.value.line == 7
    assert "[0, pi]" in str(err.value)


def test_too_few_nodes(write_config):
    with pytest.raises(ConfigError) as err:
        load_scenario(write_config(EVOLVE.replace("nodes = 101", "nodes = 4")))
    assert "at least 5" in str(err.value)


def test_zero_spinor_is_rejected(write_config):
    text = EVOLVE.replace("c_up = 3, 0", "c_up = 0, 0").replace("c_down = 0, 4", "c_down = 0, 0")
    with pytest.raises(ConfigError):
        load_scenario(write_config(text))


def test_unknown_kind_and_malformed_file(write_config):
    with pytest.raises(ConfigError):
        load_scenario(write_config(EVOLVE.replace("kind = conical", "kind = helical")))
    with pytest.raises(ConfigError):
        load_scenario(write_config("no section header\n", name="broken.ini"))
    with pytest.raises(ConfigError):
        load_scenario("does/not/exist.ini")


def test_sampled_table_resolves_relative_to_config(write_config, tmp_path):
    (tmp_path / "drive.csv").write_text("t,omega0,theta,phi\n0,1,0.5,0\n1,1,0.5,0.1\n2,1,0.5,0.2\n")
    cfg = load_scenario(write_config("""
        [drive]
        kind = sampled
        table = drive.csv

        [time]
        t_end = 2
        nodes = 11
    """))
    assert cfg.drive.t_span == (0.0, 2.0)
    assert cfg.t_end == 2.0


def test_missing_table_is_a_config_error(write_config):
    with pytest.raises(ConfigError) as err:
        load_scenario(write_config("[drive]\nkind = sampled\ntable = nowhere.csv\n"))
    assert err.value.key == "drive.table"


def test_sweep_values_must_not_be_empty(write_config):
    with pytest.raises(ConfigError) as err:
        load_scenario(write_config(EVOLVE + "\n[sweep]\nparameter = nu\nvalues =\n"))
    assert err.value.key == "sweep.values"


def test_sweep_study_parameter_pairing(write_config):
    with pytest.raises(ConfigError):
        load_scenario(write_config(EVOLVE + "\n[sweep]\nparameter = omega0\nvalues = 1, 2\nstudy = berry\n"))


def test_field_preset_and_grid(write_config):
    cfg = load_scenario(write_config("""
        [field]
        preset = earth
        v = 10

        [grid]
        r_min = 7e6
        r_max = 8e6
        n_r = 2
        theta_min = 0.5
        theta_max = 1.0
        n_theta = 2
    """))
    fs = cfg.field_settings
    assert fs.kerr.M == pytest.approx(5.9722e24)
    assert fs.frame.v == 10.0
    assert fs.frame.omega == pytest.approx(7.2921159e-5)
    assert cfg.grid.r_spacing == "log"
    assert cfg.grid.n_phi == 1


def test_grid_theta_range_must_avoid_poles(write_config):
    with pytest.raises(ConfigError):
        load_scenario(write_config("""
            [field]
            omega = 1e-4

            [grid]
            r_min = 1
            r_max = 2
            n_r = 2
            theta_min = 0
            theta_max = 1
            n_theta = 2
        """))


def test_shipped_configs_parse():
    for path in sorted(CONFIGS_DIR.glob("*.ini")):
        assert load_scenario(path).name == path.stem


def test_run_longer_than_sampled_table_is_rejected(write_config, tmp_path):
    (tmp_path / "drive.csv").write_text("t,omega0,theta,phi\n0,1,0.5,0\n1,1,0.5,0.1\n2,1,0.5,0.2\n")
    with pytest.raises(ConfigError) as err:
        load_scenario(write_config("""
            [drive]
            kind = sampled
            table = drive.csv

            [time]
            t_end = 3
            nodes = 11
        """))
    assert err.value.key == "time.t_end"
    assert "table span" in str(err.value)


FIELD_GRID = """
    [field]
    omega = 1e-4
    rel_step = 1e-3

    [grid]
    r_min = 1
    r_max = 2
    n_r = 2
    theta_min = {theta_min}
    theta_max = {theta_max}
    n_theta = 2
"""


@pytest.mark.parametrize("theta_min, theta_max, key", [
    ("0.0015", "1.0", "grid.theta_min"),
    ("0.5", "3.1401", "grid.theta_max"),
])
def test_grid_must_keep_curl_stencils_off_the_poles(write_config, theta_min, theta_max, key):
    with pytest.raises(ConfigError) as err:
        load_scenario(write_config(FIELD_GRID.format(theta_min=theta_min, theta_max=theta_max)))
    assert err.value.key == key


def test_grid_close_to_pole_is_fine_with_small_stencil(write_config):
    text = FIELD_GRID.format(theta_min="0.0015", theta_max="3.1401").replace("rel_step = 1e-3", "rel_step = 1e-4")
    cfg = load_scenario(write_config(text))
    assert cfg.grid.theta_min == pytest.approx(0.0015)
