#!/usr/bin/env python3
"""
spinphase/physics/gravitomag.py
---------------------------------
Kerr metric in the fixed and rotating frames, gravitomagnetic potentials,
field strengths by numerical curl, and the Coriolis / dipole force structure.

Units are SI. Vector fields use the orthonormal spherical basis
(e_r, e_theta, e_phi); forces are returned in Cartesian components.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from spinphase.core.config import TOL
from spinphase.core.errors import DomainError, UsageError
from spinphase.models.entities import (
    FieldVector, KerrParams, MetricComponents, RotFrame, SphericalPoint,
)
from spinphase.physics.fitting import fit_power_law, fit_proportional

logger = logging.getLogger(__name__)

FieldSampler = Callable[[SphericalPoint], FieldVector]

GRID_COLUMNS = ["r", "theta", "phi", "B_r", "B_theta", "B_phi", "F_x", "F_y", "F_z"]


# --- metric -----------------------------------------------------------------

def kerr_horizons(p: KerrParams) -> List[float]:
    """Real roots of r^2 + a^2 - 2GMr/c^2 = 0, ascending."""
    m = p.mass_length
    disc = m * m - p.a * p.a
    if disc < 0:
        return []
    root = math.sqrt(disc)
    return sorted({m - root, m + root})


def _kerr_terms(p: KerrParams, x: SphericalPoint):
    rho2 = x.r ** 2 + p.a ** 2 * math.cos(x.theta) ** 2
    delta = x.r ** 2 + p.a ** 2 - 2.0 * p.mass_length * x.r
    if abs(delta) <= 1e-12 * (x.r ** 2 + p.a ** 2):
        raise DomainError(
            f"r={x.r!r} sits on a coordinate singularity: r^2 + a^2 - 2GMr/c^2 = 0 "
            f"(horizon radii {kerr_horizons(p)})")
    return rho2, delta


def kerr_metric(p: KerrParams, x: SphericalPoint) -> MetricComponents:
    """Exterior Kerr line element in the fixed frame (signature +,-,-,-)."""
    rho2, delta = _kerr_terms(p, x)
    gm_r = p.mass_length * x.r
    sin2 = math.sin(x.theta) ** 2
    return MetricComponents(
        g_tt=1.0 - 2.0 * gm_r / rho2,
        g_rr=-rho2 / delta,
        g_thth=-rho2,
        g_phph=-sin2 * (2.0 * p.a ** 2 * sin2 * gm_r / rho2 + x.r ** 2 + p.a ** 2),
        g_tph=2.0 * p.a * sin2 * gm_r / rho2,
        g_tr=0.0,
    )


def rotating_metric(p: KerrParams, f: RotFrame, x: SphericalPoint,
                    check: bool = True) -> MetricComponents:
    """
    Kerr metric seen from a frame rotating at ``f.omega`` with radial drift
    ``f.v``, i.e. the fixed-frame line element after
    dr = dr' + v dt', dphi = dphi' - omega dt', dtheta = dtheta', dt = dt'.
    """
    g = kerr_metric(p, x)
    if check:
        f.check_validity(x.r, x.theta)
    c = p.c
    w, v = f.omega / c, f.v / c
    return MetricComponents(
        g_tt=g.g_tt + g.g_rr * v * v + g.g_phph * w * w - g.g_tph * w,
        g_rr=g.g_rr,
        g_thth=g.g_thth,
        g_phph=g.g_phph,
        g_tph=g.g_tph - 2.0 * g.g_phph * w,
        g_tr=2.0 * g.g_rr * v,
    )


def line_element(g: MetricComponents, c: float, dt: float, dr: float,
                 dtheta: float, dphi: float) -> float:
    cdt = c * dt
    return (g.g_tt * cdt * cdt + g.g_rr * dr * dr + g.g_thth * dtheta * dtheta
            + g.g_phph * dphi * dphi + g.g_tph * cdt * dphi + g.g_tr * cdt * dr)


def cross_term_exact(p: KerrParams, f: RotFrame, x: SphericalPoint, check: bool = True) -> float:
    """Coefficient of dt' dphi' in the rotating-frame line element."""
    return p.c * rotating_metric(p, f, x, check=check).g_tph


def check_frame_validity(f: RotFrame, points: Sequence[SphericalPoint]) -> bool:
    """One validity check for a whole point set, at the point where omega r sin(theta) is smallest."""
    if not points:
        return True
    worst = min(points, key=lambda x: x.r * abs(math.sin(x.theta)))
    return f.check_validity(worst.r, worst.theta)


def cross_term_approx(p: KerrParams, f: RotFrame, x: SphericalPoint) -> float:
    """The dt' dphi' coefficient with the a^2/r^2 corrections dropped."""
    sin2 = math.sin(x.theta) ** 2
    return 2.0 * p.a * p.G * p.M * sin2 / (p.c * x.r) + 2.0 * f.omega * x.r ** 2 * sin2


def gravitoelectric_potential(g: MetricComponents) -> float:
    """Phi / c^2 = (g_tt - 1) / 2; for G = 0 this is the centrifugal -omega^2 r^2 sin^2 th / 2c^2."""
    return 0.5 * (g.g_tt - 1.0)


# --- potentials and fields --------------------------------------------------

def mass_potential(p: KerrParams, x: SphericalPoint) -> FieldVector:
    """Frame-dragging part of the potential, sourced by the body's spin."""
    return FieldVector(0.0, 0.0, 2.0 * p.a * p.G * p.M * math.sin(x.theta) / (p.c * x.r ** 2))


def frame_potential(f: RotFrame, x: SphericalPoint) -> FieldVector:
    """Potential induced by the choice of rotating frame."""
    return FieldVector(-2.0 * f.v, 0.0, 2.0 * f.omega * x.r * math.sin(x.theta))


def gravitomagnetic_potential(p: KerrParams, f: RotFrame, x: SphericalPoint) -> FieldVector:
    """A = (g01, g02, g03) in orthonormal components."""
    return mass_potential(p, x) + frame_potential(f, x)


def _check_stencil(x: SphericalPoint, h: float) -> float:
    if not h > 0:
        raise DomainError(f"finite-difference step must be positive (h={h!r})")
    dtheta = h / x.r
    if x.r - 2.0 * h <= 0 or x.theta - 2.0 * dtheta <= 0 or x.theta + 2.0 * dtheta >= math.pi:
        raise DomainError(
            f"point (r={x.r!r}, theta={x.theta!r}) is within 2h of a coordinate singularity (h={h!r})")
    return dtheta


def curl_spherical(field: FieldSampler, x: SphericalPoint, h: Optional[float] = None) -> FieldVector:
    """
    Curl of ``field`` at ``x`` by second-order central differences.
    ``h`` is a length; angular steps are h/r and h/(r sin theta).
    """
    h = TOL.curl_rel_step * x.r if h is None else h
    dtheta = _check_stencil(x, h)
    r, th, ph = x.r, x.theta, x.phi
    st = math.sin(th)
    dphi = h / (r * st)

    f_rp = field(SphericalPoint(r + h, th, ph))
    f_rm = field(SphericalPoint(r - h, th, ph))
    f_tp = field(SphericalPoint(r, th + dtheta, ph))
    f_tm = field(SphericalPoint(r, th - dtheta, ph))
    f_pp = field(SphericalPoint(r, th, ph + dphi))
    f_pm = field(SphericalPoint(r, th, ph - dphi))

    d_r_rphi = ((r + h) * f_rp.comp_phi - (r - h) * f_rm.comp_phi) / (2.0 * h)
    d_r_rtheta = ((r + h) * f_rp.comp_theta - (r - h) * f_rm.comp_theta) / (2.0 * h)
    d_t_sphi = (math.sin(th + dtheta) * f_tp.comp_phi
                - math.sin(th - dtheta) * f_tm.comp_phi) / (2.0 * dtheta)
    d_t_r = (f_tp.comp_r - f_tm.comp_r) / (2.0 * dtheta)
    d_p_theta = (f_pp.comp_theta - f_pm.comp_theta) / (2.0 * dphi)
    d_p_r = (f_pp.comp_r - f_pm.comp_r) / (2.0 * dphi)

    return FieldVector(
        comp_r=(d_t_sphi - d_p_theta) / (r * st),
        comp_theta=(d_p_r / st - d_r_rphi) / r,
        comp_phi=(d_r_rtheta - d_t_r) / r,
    )


def _potential_sampler(p: KerrParams, f: RotFrame, part: str) -> FieldSampler:
    if part == "full":
        return lambda pt: gravitomagnetic_potential(p, f, pt)
    if part == "frame":
        return lambda pt: frame_potential(f, pt)
    if part == "mass":
        return lambda pt: mass_potential(p, pt)
    raise UsageError(f"unknown field part {part!r}; expected 'full', 'frame' or 'mass'")


def gravitomagnetic_field(p: KerrParams, f: RotFrame, x: SphericalPoint,
                          h: Optional[float] = None, part: str = "full",
                          extrapolate: bool = False) -> FieldVector:
    """
    B = -1/2 curl A. With ``extrapolate`` the steps h and h/2 are combined
    (Richardson) which cancels the leading h^2 error.
    """
    sampler = _potential_sampler(p, f, part)
    h = TOL.curl_rel_step * x.r if h is None else h
    coarse = curl_spherical(sampler, x, h).scaled(-0.5)
    if not extrapolate:
        return coarse
    fine = curl_spherical(sampler, x, 0.5 * h).scaled(-0.5)
    return FieldVector.from_array((4.0 * fine.as_array() - coarse.as_array()) / 3.0)


def frame_field_exact(f: RotFrame, x: SphericalPoint) -> FieldVector:
    """Closed-form -1/2 curl of the frame potential."""
    return FieldVector(-2.0 * f.omega * math.cos(x.theta), 2.0 * f.omega * math.sin(x.theta), 0.0)


def spherical_to_cartesian(vec: FieldVector, x: SphericalPoint) -> np.ndarray:
    e = x.unit_vectors()
    return vec.comp_r * e["r"] + vec.comp_theta * e["theta"] + vec.comp_phi * e["phi"]


# --- forces -----------------------------------------------------------------

def lorentz_force(mass: float, velocity, B: FieldVector, x: SphericalPoint) -> np.ndarray:
    """
    Gravitational Lorentz force on a test mass, in Cartesian components.

    Evaluated as m * (B x v) = -m * (v x B). For the frame field
    B = -2 omega this is 2m (v x omega), the Coriolis force
    (classically written -2m omega x v).
    """
    v = np.asarray(velocity, dtype=float)
    return mass * np.cross(spherical_to_cartesian(B, x), v)


def coriolis_force(mass: float, velocity, omega_vec) -> np.ndarray:
    return 2.0 * mass * np.cross(np.asarray(velocity, dtype=float), np.asarray(omega_vec, dtype=float))


def gravitoelectric_force(p: KerrParams, f: RotFrame, x: SphericalPoint, mass: float,
                          h: Optional[float] = None) -> np.ndarray:
    """-m c^2 grad Phi of the rotating-frame metric, Cartesian components."""
    h = TOL.curl_rel_step * x.r if h is None else h
    dtheta = _check_stencil(x, h)
    dphi = h / (x.r * math.sin(x.theta))
    f.check_validity(x.r, x.theta)

    def phi(r, th, ph):
        return gravitoelectric_potential(rotating_metric(p, f, SphericalPoint(r, th, ph), check=False))

    r, th, ph = x.r, x.theta, x.phi
    grad = FieldVector(
        comp_r=(phi(r + h, th, ph) - phi(r - h, th, ph)) / (2.0 * h),
        comp_theta=(phi(r, th + dtheta, ph) - phi(r, th - dtheta, ph)) / (2.0 * h),
        comp_phi=(phi(r, th, ph + dphi) - phi(r, th, ph - dphi)) / (2.0 * h),
    )
    return -mass * p.c ** 2 * spherical_to_cartesian(grad, x)


# --- grid evaluation and fits -----------------------------------------------

@dataclass(frozen=True)
class FieldGrid:
    """Tensor grid, evaluated r-major, then theta, then phi."""
    r: np.ndarray
    theta: np.ndarray
    phi: np.ndarray

    @classmethod
    def build(cls, r_min: float, r_max: float, n_r: int, theta_min: float, theta_max: float,
              n_theta: int, phi_min: float = 0.0, phi_max: float = 0.0, n_phi: int = 1,
              r_spacing: str = "log") -> "FieldGrid":
        if r_spacing == "log":
            r = np.geomspace(r_min, r_max, n_r)
        elif r_spacing == "linear":
            r = np.linspace(r_min, r_max, n_r)
        else:
            raise UsageError(f"unknown radial spacing {r_spacing!r}")
        return cls(r=r, theta=np.linspace(theta_min, theta_max, n_theta),
                   phi=np.linspace(phi_min, phi_max, n_phi))

    def points(self) -> List[SphericalPoint]:
        return [SphericalPoint(float(r), float(t), float(ph))
                for r in self.r for t in self.theta for ph in self.phi]

    def __len__(self) -> int:
        return len(self.r) * len(self.theta) * len(self.phi)


def _grid_row(p: KerrParams, f: RotFrame, r: float, thetas, phis, mass: float,
              h_rel: float, extrapolate: bool) -> List[List[float]]:
    rows = []
    for th in thetas:
        for ph in phis:
            x = SphericalPoint(float(r), float(th), float(ph))
            B = gravitomagnetic_field(p, f, x, h=h_rel * x.r, extrapolate=extrapolate)
            F = lorentz_force(mass, f.v * x.unit_vectors()["r"], B, x)
            rows.append([x.r, x.theta, x.phi, B.comp_r, B.comp_theta, B.comp_phi, F[0], F[1], F[2]])
    return rows


def field_grid(p: KerrParams, f: RotFrame, grid: FieldGrid, mass: float,
               h_rel: float = TOL.curl_rel_step, extrapolate: bool = True,
               n_jobs: int = 1) -> pd.DataFrame:
    """
    Field and force over ``grid`` for a test particle moving radially at
    ``f.v``. Rows are grid-major; radial shells run concurrently.
    """
    shells = Parallel(n_jobs=n_jobs)(
        delayed(_grid_row)(p, f, r, grid.theta, grid.phi, mass, h_rel, extrapolate) for r in grid.r)
    rows = [row for shell in shells for row in shell]
    logger.info(f"Evaluated gravitomagnetic field on {len(rows)} grid points")
    return pd.DataFrame(rows, columns=GRID_COLUMNS)


def frame_field_deviation(f: RotFrame, points: Sequence[SphericalPoint],
                          h_rel: float = TOL.curl_rel_step, extrapolate: bool = True) -> float:
    """
    Largest deviation of the numerical frame field, in Cartesian form, from
    the constant vector -2 omega z-hat; relative to 2|omega| when omega != 0.
    """
    p_null = KerrParams(G=0.0, M=0.0, c=1.0, a=0.0)
    target = np.array([0.0, 0.0, -2.0 * f.omega])
    scale = 2.0 * abs(f.omega) if f.omega != 0 else 1.0
    worst = 0.0
    for x in points:
        B = gravitomagnetic_field(p_null, f, x, h=h_rel * x.r, part="frame", extrapolate=extrapolate)
        worst = max(worst, float(np.max(np.abs(spherical_to_cartesian(B, x) - target))) / scale)
    return worst


@dataclass(frozen=True)
class DipoleFit:
    """
    Fit of the spin-sourced field to amp * (-2 cos theta, -sin theta, 0) / r^3.
    ``constant`` is amp / a, the K of K (a/r^3 - 3 (a.r) r / r^5).
    """
    amplitude: Optional[float]
    constant: Optional[float]
    expected_constant: float
    quoted_constant: float
    r_squared: Optional[float]
    falloff_exponent: Optional[float]

    @property
    def quoted_ratio(self) -> Optional[float]:
        if self.constant is None or self.quoted_constant == 0:
            return None
        return self.constant / self.quoted_constant


def fit_dipole(p: KerrParams, points: Sequence[SphericalPoint],
               h_rel: float = TOL.curl_rel_step, extrapolate: bool = True) -> DipoleFit:
    """Least-squares dipole amplitude and r^-3 falloff of the mass part of the field."""
    expected = p.G * p.M / p.c
    quoted = 2.0 * p.G / p.c
    null_frame = RotFrame(omega=0.0, v=0.0)
    radii, pattern, values, magnitudes, shapes = [], [], [], [], []
    for x in points:
        B = gravitomagnetic_field(p, null_frame, x, h=h_rel * x.r, part="mass", extrapolate=extrapolate)
        ct, st = math.cos(x.theta), math.sin(x.theta)
        pattern += [-2.0 * ct / x.r ** 3, -st / x.r ** 3]
        values += [B.comp_r, B.comp_theta]
        radii.append(x.r)
        magnitudes.append(math.hypot(B.comp_r, B.comp_theta))
        shapes.append(math.sqrt(4.0 * ct * ct + st * st))

    if not np.any(np.asarray(values)):
        logger.info("Spin-sourced field vanishes identically (a, G or M is zero); no dipole fit")
        return DipoleFit(None, None, expected, quoted, None, None)

    amp_fit = fit_proportional(pattern, values)
    falloff = fit_power_law(radii, np.asarray(magnitudes) / np.asarray(shapes))
    constant = amp_fit.slope / p.a
    fit = DipoleFit(
        amplitude=amp_fit.slope,
        constant=constant,
        expected_constant=expected,
        quoted_constant=quoted,
        r_squared=amp_fit.r_squared,
        falloff_exponent=-falloff.exponent,
    )
    logger.info(f"Dipole amplitude {amp_fit.slope:.6e} (expected aGM/c = {p.a * expected:.6e}), "
                f"falloff exponent {fit.falloff_exponent:.4f}, R^2 = {amp_fit.r_squared:.12f}")
    if abs(constant - quoted) > 1e-6 * abs(quoted):
        logger.warning(f"Fitted dipole constant K = {constant:.6e} differs from 2G/c = {quoted:.6e} "
                       f"(ratio {fit.quoted_ratio:.6e}, GM/c = {expected:.6e})")
    return fit
