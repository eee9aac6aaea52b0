#!/usr/bin/env python3
"""
spinphase/core/config.py
--------------------------
Application configuration, tolerances and physical constants.
"""

import os
from dataclasses import dataclass
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Base directories
BASE_DIR = Path(__file__).parent.parent.parent.resolve()
CONFIGS_DIR = BASE_DIR / "configs"
OUTPUT_DIR = Path(os.getenv("SPINPHASE_OUTPUT_DIR", str(BASE_DIR / "output")))

# Logging and run settings
LOG_LEVEL = os.getenv("SPINPHASE_LOG_LEVEL", "INFO")
N_JOBS = int(os.getenv("SPINPHASE_N_JOBS", 1))
DEFAULT_SUBSTEPS = int(os.getenv("SPINPHASE_SUBSTEPS", 64))
FIDELITY_THRESHOLD = float(os.getenv("SPINPHASE_FIDELITY_THRESHOLD", 1.0 - 1e-8))

# Physical constants (SI)
G_NEWTON = 6.67430e-11
C_LIGHT = 299792458.0
NEUTRON_MASS = 1.67492749804e-27

# Earth presets
EARTH_MASS = 5.9722e24
EARTH_ANGULAR_MOMENTUM = 5.86e33
EARTH_OMEGA = 7.2921159e-5


@dataclass(frozen=True)
class Tolerances:
    """Every numerical tolerance used across the package."""
    hermitian: float = 1e-14
    unitary: float = 1e-12
    unit_axis: float = 1e-10
    degenerate_gap: float = 1e-13
    eig_phase_tie: float = 1e-12
    spinor_norm: float = 1e-12
    fidelity_norm: float = 1e-6
    pole: float = 1e-12
    hv_offdiagonal: float = 1e-9
    rtol: float = float(os.getenv("SPINPHASE_RTOL", 1e-10))
    atol: float = float(os.getenv("SPINPHASE_ATOL", 1e-12))
    curl_rel_step: float = 1e-4
    time_match: float = 1e-12
    aux_segment_turns: float = 8.0


TOL = Tolerances()
