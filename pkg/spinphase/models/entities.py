#!/usr/bin/env python3
"""
spinphase/models/entities.py
------------------------------
Immutable value records shared by the physics modules.

Matrices and spinors are plain complex128 numpy arrays; the records here
hold everything else.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from spinphase.core.config import (
    C_LIGHT, EARTH_ANGULAR_MOMENTUM, EARTH_MASS, EARTH_OMEGA, G_NEWTON,
)
from spinphase.core.errors import DomainError

logger = logging.getLogger(__name__)


def _frozen(array) -> np.ndarray:
    """Return a read-only float/complex copy of ``array``."""
    out = np.array(array, copy=True)
    out.setflags(write=False)
    return out


# --- gravitomagnetics -------------------------------------------------------

@dataclass(frozen=True)
class KerrParams:
    """
    Constants of the gravitating body (SI).
    ``a`` is a length: a*c is the angular momentum per unit mass.
    """
    G: float
    M: float
    c: float
    a: float

    def __post_init__(self):
        if self.G < 0 or self.M < 0:
            raise DomainError(f"G and M must be non-negative (G={self.G}, M={self.M})")
        if not self.c > 0:
            raise DomainError(f"c must be positive (c={self.c})")

    @property
    def mass_length(self) -> float:
        """GM/c^2, the gravitational radius scale."""
        return self.G * self.M / self.c ** 2

    @classmethod
    def earth(cls) -> "KerrParams":
        a = EARTH_ANGULAR_MOMENTUM / (EARTH_MASS * C_LIGHT)
        return cls(G=G_NEWTON, M=EARTH_MASS, c=C_LIGHT, a=a)


@dataclass(frozen=True)
class RotFrame:
    """Rotation rate of the frame and radial particle speed."""
    omega: float
    v: float = 0.0

    def check_validity(self, r: float, theta: float) -> bool:
        """
        The frame transformation assumes |v| << omega*r. Violations are
        logged, never raised.
        """
        scale = abs(self.omega) * r * abs(math.sin(theta))
        if self.v != 0.0 and abs(self.v) >= 0.1 * scale:
            logger.warning(f"Radial speed |v|={abs(self.v):.3g} m/s is not small against "
                           f"omega*r*sin(theta)={scale:.3g} m/s; frame expansion is outside its range")
            return False
        return True

    @classmethod
    def earth(cls, v: float = 0.0) -> "RotFrame":
        return cls(omega=EARTH_OMEGA, v=v)


@dataclass(frozen=True)
class SphericalPoint:
    r: float
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"radius must be positive (r={self.r})")
        if not 0.0 <= self.theta <= math.pi:
            raise DomainError(f"polar angle must lie in [0, pi] (theta={self.theta})")

    def unit_vectors(self) -> Dict[str, np.ndarray]:
        """Orthonormal basis e_r, e_theta, e_phi in Cartesian components."""
        st, ct = math.sin(self.theta), math.cos(self.theta)
        sp, cp = math.sin(self.phi), math.cos(self.phi)
        return {
            "r": np.array([st * cp, st * sp, ct]),
            "theta": np.array([ct * cp, ct * sp, -st]),
            "phi": np.array([-sp, cp, 0.0]),
        }

    def cartesian(self) -> np.ndarray:
        return self.r * self.unit_vectors()["r"]


@dataclass(frozen=True)
class MetricComponents:
    """
    Line-element coefficients with x0 = c*t:
    ds^2 = g_tt (c dt)^2 + g_rr dr^2 + g_thth dtheta^2 + g_phph dphi^2
           + g_tph (c dt) dphi + g_tr (c dt) dr
    Off-diagonal entries are full cross-term coefficients (not halved).
    """
    g_tt: float
    g_rr: float
    g_thth: float
    g_phph: float
    g_tph: float = 0.0
    g_tr: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.g_tt, self.g_rr, self.g_thth, self.g_phph, self.g_tph, self.g_tr])


@dataclass(frozen=True)
class FieldVector:
    """Vector field value in orthonormal spherical components."""
    comp_r: float
    comp_theta: float
    comp_phi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.comp_r, self.comp_theta, self.comp_phi])

    @classmethod
    def from_array(cls, values) -> "FieldVector":
        return cls(float(values[0]), float(values[1]), float(values[2]))

    def __add__(self, other: "FieldVector") -> "FieldVector":
        return FieldVector.from_array(self.as_array() + other.as_array())

    def __sub__(self, other: "FieldVector") -> "FieldVector":
        return FieldVector.from_array(self.as_array() - other.as_array())

    def scaled(self, factor: float) -> "FieldVector":
        return FieldVector.from_array(factor * self.as_array())


# --- spin dynamics ----------------------------------------------------------

@dataclass(frozen=True)
class DriveSample:
    """Rotation vector parameters and their time derivatives at one instant."""
    omega0: float
    theta: float
    phi: float
    d_omega0: float = 0.0
    d_theta: float = 0.0
    d_phi: float = 0.0


@dataclass(frozen=True)
class AuxState:
    """
    Orientation (lambda, gamma) of the invariant axis
    m = (sin lam cos gamma, sin lam sin gamma, cos lam). gamma is unwrapped.
    """
    lam: float
    gamma: float

    def unit_vector(self) -> np.ndarray:
        sl = math.sin(self.lam)
        return np.array([sl * math.cos(self.gamma), sl * math.sin(self.gamma), math.cos(self.lam)])

    @classmethod
    def from_vector(cls, m, gamma_hint: Optional[float] = None) -> "AuxState":
        """Angles of a (not necessarily unit) vector; gamma is shifted by 2*pi*k towards the hint."""
        mx, my, mz = float(m[0]), float(m[1]), float(m[2])
        lam = math.atan2(math.hypot(mx, my), mz)
        gamma = math.atan2(my, mx)
        if gamma_hint is not None:
            gamma += 2.0 * math.pi * round((gamma_hint - gamma) / (2.0 * math.pi))
        return cls(lam=lam, gamma=gamma)


SPIN_UP = 0.5
SPIN_DOWN = -0.5


@dataclass(frozen=True)
class SpinBranch:
    """Eigenvalue sigma = +1/2 ("up") or -1/2 ("down") of the invariant."""
    sigma: float

    def __post_init__(self):
        if self.sigma not in (SPIN_UP, SPIN_DOWN):
            raise DomainError(f"spin branch must be +1/2 or -1/2 (got {self.sigma})")

    @property
    def index(self) -> int:
        """Row of |sigma> in the sigma_3 eigenbasis (up first)."""
        return 0 if self.sigma > 0 else 1


BRANCHES = (SpinBranch(SPIN_UP), SpinBranch(SPIN_DOWN))


@dataclass(frozen=True)
class PhaseDecomposition:
    """
    Accumulated phases at every trajectory node, per spin branch.
    The down branch is the negation of the up branch.
    """
    t: np.ndarray
    geometric_up: np.ndarray
    dynamical_up: np.ndarray
    geometric_down: np.ndarray = field(init=False)
    dynamical_down: np.ndarray = field(init=False)
    total_up: np.ndarray = field(init=False)
    total_down: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "t", _frozen(self.t))
        object.__setattr__(self, "geometric_up", _frozen(self.geometric_up))
        object.__setattr__(self, "dynamical_up", _frozen(self.dynamical_up))
        object.__setattr__(self, "geometric_down", _frozen(-self.geometric_up))
        object.__setattr__(self, "dynamical_down", _frozen(-self.dynamical_up))
        object.__setattr__(self, "total_up", _frozen(self.geometric_up + self.dynamical_up))
        object.__setattr__(self, "total_down", _frozen(self.geometric_down + self.dynamical_down))

    def total(self, branch: SpinBranch) -> np.ndarray:
        return self.total_up if branch.sigma > 0 else self.total_down

    def final(self) -> Dict[str, float]:
        return {
            "geometric_up": float(self.geometric_up[-1]),
            "geometric_down": float(self.geometric_down[-1]),
            "dynamical_up": float(self.dynamical_up[-1]),
            "dynamical_down": float(self.dynamical_down[-1]),
            "total_up": float(self.total_up[-1]),
            "total_down": float(self.total_down[-1]),
        }


@dataclass(frozen=True)
class PhaseDifference:
    """Up-minus-down phase differences, unwrapped, at every node."""
    t: np.ndarray
    geometric: np.ndarray
    dynamical: np.ndarray
    total: np.ndarray

    def final(self) -> Dict[str, float]:
        return {
            "geometric": float(self.geometric[-1]),
            "dynamical": float(self.dynamical[-1]),
            "total": float(self.total[-1]),
        }


@dataclass(frozen=True)
class EvolutionResult:
    """Direct integration output; norm drift is reported, never corrected."""
    t: np.ndarray
    states: np.ndarray
    norms: np.ndarray
    substeps: int
    total_steps: int

    def __post_init__(self):
        for name in ("t", "states", "norms"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - self.norms[0])))


@dataclass(frozen=True)
class ComparisonReport:
    """Cross-validation of the invariant-based solution against direct integration."""
    scenario: str
    t: np.ndarray
    fidelity: np.ndarray
    phase_difference: PhaseDifference
    phases: PhaseDecomposition
    f_max_abs: float
    adiabaticity: float
    invariant_residual: Optional[float] = None
    eigenvalue_deviation: Optional[float] = None
    max_norm_drift: Optional[float] = None

    @property
    def min_fidelity(self) -> float:
        return float(np.min(self.fidelity))
