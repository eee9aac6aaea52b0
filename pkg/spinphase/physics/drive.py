#!/usr/bin/env python3
"""
spinphase/physics/drive.py
----------------------------
Time-dependent rotation vector
    omega(t) = omega0(t) [sin th cos ph, sin th sin ph, cos th]
and the spin-rotation Hamiltonian H = omega . sigma / 2 (hbar = 1).
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from spinphase.core.config import TOL
from spinphase.core.errors import DomainError, OutOfRangeError, UsageError
from spinphase.models.entities import DriveSample
from spinphase.physics.su2 import Mat2, pauli

logger = logging.getLogger(__name__)

KINDS = ("constant", "conical", "modulated", "sampled")
TABLE_COLUMNS = ["t", "omega0", "theta", "phi"]


@dataclass(frozen=True)
class DriveSpec:
    """
    Parameters of one drive. Build it with the factory classmethods;
    ``sampled`` drives carry their table and natural cubic splines.
    """
    kind: str
    omega0: float = 0.0
    theta0: float = 0.0
    phi0: float = 0.0
    nu: float = 0.0
    epsilon: float = 0.0
    nu_m: float = 0.0
    table: Optional[pd.DataFrame] = field(default=None, compare=False, repr=False)
    _splines: Dict[str, CubicSpline] = field(default_factory=dict, init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown drive kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.kind == "sampled":
            self._build_splines()
            return
        if self.omega0 < 0:
            raise DomainError(f"omega0 must be non-negative (omega0={self.omega0})")
        if not 0.0 <= self.theta0 <= math.pi:
            raise DomainError(f"theta0 must lie in [0, pi] (theta0={self.theta0})")
        if self.kind == "modulated" and abs(self.epsilon) > 1.0:
            raise DomainError(f"|epsilon| > 1 makes omega0(t) negative (epsilon={self.epsilon})")

    def _build_splines(self):
        table = self.table
        if table is None:
            raise UsageError("a sampled drive needs a table")
        missing = [c for c in TABLE_COLUMNS if c not in table.columns]
        if missing:
            raise DomainError(f"drive table lacks columns {missing}")
        t = table["t"].to_numpy(dtype=float)
        if t.size < 2 or np.any(np.diff(t) <= 0):
            raise DomainError("drive table needs at least two rows with strictly increasing t")
        if np.any(table["omega0"] < 0):
            raise DomainError("drive table has negative omega0")
        if np.any((table["theta"] < 0) | (table["theta"] > math.pi)):
            raise DomainError("drive table has theta outside [0, pi]")
        for col in TABLE_COLUMNS[1:]:
            self._splines[col] = CubicSpline(t, table[col].to_numpy(dtype=float), bc_type="natural")

    # --- factories ---------------------------------------------------------

    @classmethod
    def constant(cls, omega0: float, theta0: float, phi0: float = 0.0) -> "DriveSpec":
        return cls(kind="constant", omega0=omega0, theta0=theta0, phi0=phi0)

    @classmethod
    def conical(cls, omega0: float, theta0: float, nu: float, phi0: float = 0.0) -> "DriveSpec":
        """Axis precessing about z at rate ``nu`` on a cone of half-angle ``theta0``."""
        return cls(kind="conical", omega0=omega0, theta0=theta0, phi0=phi0, nu=nu)

    @classmethod
    def modulated(cls, omega0: float, theta0: float, nu: float, epsilon: float, nu_m: float,
                  phi0: float = 0.0) -> "DriveSpec":
        """Conical drive with omega0(t) = omega0 (1 + epsilon sin(nu_m t))."""
        return cls(kind="modulated", omega0=omega0, theta0=theta0, phi0=phi0, nu=nu,
                   epsilon=epsilon, nu_m=nu_m)

    @classmethod
    def sampled(cls, table: pd.DataFrame) -> "DriveSpec":
        return cls(kind="sampled", table=table.reset_index(drop=True))

    # --- time domain -------------------------------------------------------

    @property
    def t_span(self) -> Optional[tuple]:
        """Table span for sampled drives, None for analytic ones."""
        if self.kind != "sampled":
            return None
        t = self.table["t"]
        return float(t.iloc[0]), float(t.iloc[-1])

    @property
    def reference_omega0(self) -> float:
        if self.kind == "sampled":
            return float(self.table["omega0"].max())
        return self.omega0

    def period(self) -> float:
        """Spin precession period 2 pi / omega0."""
        w = self.reference_omega0
        if w <= 0:
            raise DomainError("precession period is undefined for omega0 = 0")
        return 2.0 * math.pi / w


def sample(spec: DriveSpec, t: float) -> DriveSample:
    """Drive values and time derivatives at ``t``."""
    if spec.kind == "constant":
        return DriveSample(spec.omega0, spec.theta0, spec.phi0)
    if spec.kind == "conical":
        return DriveSample(spec.omega0, spec.theta0, spec.phi0 + spec.nu * t, d_phi=spec.nu)
    if spec.kind == "modulated":
        arg = spec.nu_m * t
        return DriveSample(
            omega0=spec.omega0 * (1.0 + spec.epsilon * math.sin(arg)),
            theta=spec.theta0,
            phi=spec.phi0 + spec.nu * t,
            d_omega0=spec.omega0 * spec.epsilon * spec.nu_m * math.cos(arg),
            d_phi=spec.nu,
        )

    t0, t1 = spec.t_span
    slack = TOL.time_match * max(1.0, abs(t0), abs(t1))
    if t < t0 - slack or t > t1 + slack:
        raise OutOfRangeError(f"t={t!r} lies outside the drive table [{t0!r}, {t1!r}]")
    t = min(max(t, t0), t1)
    s = spec._splines
    return DriveSample(
        omega0=float(s["omega0"](t)),
        theta=float(s["theta"](t)),
        phi=float(s["phi"](t)),
        d_omega0=float(s["omega0"](t, 1)),
        d_theta=float(s["theta"](t, 1)),
        d_phi=float(s["phi"](t, 1)),
    )


def axis_vector(s: DriveSample) -> np.ndarray:
    st = math.sin(s.theta)
    return np.array([st * math.cos(s.phi), st * math.sin(s.phi), math.cos(s.theta)])


def omega_vector(s: DriveSample) -> np.ndarray:
    return s.omega0 * axis_vector(s)


def axis_rate(s: DriveSample) -> np.ndarray:
    """Time derivative of the unit drive axis."""
    st, ct = math.sin(s.theta), math.cos(s.theta)
    sp, cp = math.sin(s.phi), math.cos(s.phi)
    return (s.d_theta * np.array([ct * cp, ct * sp, -st])
            + s.d_phi * st * np.array([-sp, cp, 0.0]))


_SIGMA_PLUS = pauli("+")
_SIGMA_MINUS = pauli("-")
_SIGMA_3 = pauli(3)


def hamiltonian(s: DriveSample) -> Mat2:
    """
    H = omega0 { 1/4 sin th e^{-i ph} sigma_+ + 1/4 sin th e^{i ph} sigma_- + 1/2 cos th sigma_3 }
    which equals (omega . sigma) / 2.
    """
    st = math.sin(s.theta)
    phase = complex(math.cos(s.phi), -math.sin(s.phi))
    return s.omega0 * (0.25 * st * phase * _SIGMA_PLUS
                       + 0.25 * st * phase.conjugate() * _SIGMA_MINUS
                       + 0.5 * math.cos(s.theta) * _SIGMA_3)


# --- tables -----------------------------------------------------------------

def load_drive_table(path: Union[str, Path]) -> pd.DataFrame:
    """Read a ``t,omega0,theta,phi`` CSV (SI units, strictly increasing t)."""
    path = Path(path)
    if not path.exists():
        raise DomainError(f"drive table {path} does not exist")
    df = pd.read_csv(path)
    df.columns = [c.strip() for c in df.columns]
    missing = [c for c in TABLE_COLUMNS if c not in df.columns]
    if missing:
        raise DomainError(f"drive table {path} lacks columns {missing}")
    df = df[TABLE_COLUMNS].astype(float)
    if np.any(np.diff(df["t"].to_numpy()) <= 0):
        raise DomainError(f"drive table {path} is not strictly increasing in t")
    logger.info(f"Loaded drive table {path.name} with {len(df)} knots")
    return df


def tabulate(spec: DriveSpec, times: Sequence[float]) -> pd.DataFrame:
    """Sample ``spec`` at ``times`` into a table loadable by ``DriveSpec.sampled``."""
    rows = []
    for t in times:
        s = sample(spec, float(t))
        rows.append([float(t), s.omega0, s.theta, s.phi])
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)
