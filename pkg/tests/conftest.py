import math
import textwrap

import numpy as np
import pytest

from spinphase.physics.drive import DriveSpec


@pytest.fixture
def rng():
    # Fixed seed so every randomized check is reproducible
    return np.random.default_rng(20240611)


@pytest.fixture
def conical_drive():
    return DriveSpec.conical(omega0=1.0, theta0=math.pi / 4, nu=0.3)


@pytest.fixture
def write_config(tmp_path):
    """
    Write an INI scenario into tmp_path and return its path.
    """
    def _write(text: str, name: str = "scenario.ini"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(text).lstrip(), encoding="utf-8")
        return path
    return _write


def random_unit_vector(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)
