#!/usr/bin/env python3
"""
spinphase/physics/lr_solver.py
--------------------------------
Invariant-based exact solution of i dPsi/dt = H(t) Psi for the spin-rotation
Hamiltonian.

The invariant I(t) = (m . sigma) / 2 has a unit axis m = (sin lam cos gam,
sin lam sin gam, cos lam) that precesses as dm/dt = omega(t) x m. It is
integrated in that vector form, so the coordinate poles lam = 0, pi are
never singular; (lam, gam) are read back afterwards with gam unwrapped.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.interpolate import CubicSpline

from spinphase.core.config import TOL
from spinphase.core.errors import ConsistencyError, IntegrationError, OutOfRangeError, UsageError
from spinphase.models.entities import (
    BRANCHES, AuxState, DriveSample, PhaseDecomposition, SpinBranch, _frozen,
)
from spinphase.physics.drive import DriveSpec, axis_vector, hamiltonian, omega_vector, sample
from spinphase.physics.su2 import Mat2, Spinor, dagger, expm_su2, pauli, sigma_dot

logger = logging.getLogger(__name__)

INITIALIZERS = ("paper_mode", "aligned_mode", "angles")
TRAJECTORY_COLUMNS = ["t", "lambda", "gamma", "f", "phi_geo_up", "phi_dyn_up",
                      "phi_total_up", "norm_residual"]


# --- auxiliary equations ----------------------------------------------------

def aux_rhs(s: AuxState, d: DriveSample) -> Tuple[float, float]:
    """
    dlam/dt = omega0 sin th sin(ph - gam)
    dgam/dt = omega0 [cos th - sin th cot lam cos(ph - gam)]

    On a pole gam is a gauge choice; there the axis is taken to follow the
    drive's azimuthal travel, dgam/dt = omega0 cos th.
    """
    st, ct = math.sin(d.theta), math.cos(d.theta)
    delta = d.phi - s.gamma
    lam_dot = d.omega0 * st * math.sin(delta)
    sl = math.sin(s.lam)
    if abs(sl) < TOL.pole:
        return lam_dot, d.omega0 * ct
    gamma_dot = d.omega0 * (ct - st * math.cos(s.lam) / sl * math.cos(delta))
    return lam_dot, gamma_dot


def _as_grid(grid: Sequence[float]) -> np.ndarray:
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise UsageError(f"time grid needs at least two nodes (got {t.size})")
    if np.any(np.diff(t) <= 0):
        raise UsageError("time grid must be strictly increasing")
    return t


@dataclass(frozen=True)
class AuxTrajectory:
    """
    Invariant axis on a time grid together with the drive it answers to.
    ``geo_rate`` is dgam/dt (1 - cos lam) and ``dyn_rate`` is omega0 f.
    """
    spec: DriveSpec
    t: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray
    m: np.ndarray
    omega: np.ndarray
    f: np.ndarray
    geo_rate: np.ndarray
    dyn_rate: np.ndarray
    norm_residual: np.ndarray

    def __post_init__(self):
        for name in ("t", "lam", "gamma", "m", "omega", "f", "geo_rate", "dyn_rate", "norm_residual"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def __len__(self) -> int:
        return self.t.size

    def state(self, k: int) -> AuxState:
        return AuxState(lam=float(self.lam[k]), gamma=float(self.gamma[k]))

    def drive_sample(self, k: int) -> DriveSample:
        return sample(self.spec, float(self.t[k]))

    @property
    def f_max_abs(self) -> float:
        return float(np.max(np.abs(self.f)))

    def node_index(self, t: float) -> Optional[int]:
        """Index of the node at ``t``, None when ``t`` lies between nodes."""
        self.check_time(t)
        k = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[k] - t) <= TOL.time_match * max(1.0, abs(t)):
            return k
        return None

    def check_time(self, t: float):
        slack = TOL.time_match * max(1.0, abs(self.t[-1]))
        if t < self.t[0] - slack or t > self.t[-1] + slack:
            raise OutOfRangeError(f"t={t!r} lies outside the trajectory [{self.t[0]!r}, {self.t[-1]!r}]")

    def at(self, t: float) -> AuxState:
        """Axis at ``t``; exact on nodes, cubic-spline interpolated between them."""
        k = self.node_index(t)
        if k is not None:
            return self.state(k)
        m = CubicSpline(self.t, self.m, axis=0)(t)
        j = int(np.searchsorted(self.t, t))
        return AuxState.from_vector(m, gamma_hint=float(self.gamma[j]))

    def with_lambda_offset(self, delta: float) -> "AuxTrajectory":
        """Copy with lam shifted by ``delta`` at every node; used to exercise residual checks."""
        lam = self.lam + delta
        sl = np.sin(lam)
        m = np.column_stack([sl * np.cos(self.gamma), sl * np.sin(self.gamma), np.cos(lam)])
        return replace(self, lam=lam, m=m)


def _geometric_rate(m: np.ndarray, m_dot: np.ndarray) -> np.ndarray:
    # dgam/dt (1 - cos lam) written without angles; zero where gam is held on a pole
    mx, my, mz = m[:, 0], m[:, 1], m[:, 2]
    num = mx * m_dot[:, 1] - my * m_dot[:, 0]
    rho2 = mx * mx + my * my
    out = np.zeros_like(num)
    north = mz >= 0
    out[north] = num[north] / (1.0 + mz[north])
    south = ~north & (rho2 > TOL.pole ** 2)
    out[south] = num[south] * (1.0 - mz[south]) / rho2[south]
    return out


def _read_gamma(m: np.ndarray, gamma0: float) -> np.ndarray:
    raw = pd.Series(np.arctan2(m[:, 1], m[:, 0]))
    raw[np.hypot(m[:, 0], m[:, 1]) <= TOL.pole] = np.nan
    held = raw.ffill().fillna(math.remainder(gamma0, 2.0 * math.pi)).to_numpy()
    gamma = np.unwrap(held)
    return gamma + 2.0 * math.pi * round((gamma0 - gamma[0]) / (2.0 * math.pi))


def _segments(t: np.ndarray, length: float):
    """Index pairs (i, j) cutting the grid into pieces at most ``length`` long (or one interval)."""
    if not (math.isfinite(length) and length > 0.0):
        return [(0, t.size - 1)]
    marks = np.arange(t[0], t[-1], length)[1:]
    cuts = np.unique(np.concatenate([[0], np.searchsorted(t, marks), [t.size - 1]]))
    return list(zip(cuts[:-1].tolist(), cuts[1:].tolist()))


def integrate_aux(spec: DriveSpec, s0: AuxState, grid: Sequence[float],
                  rtol: Optional[float] = None, atol: Optional[float] = None) -> AuxTrajectory:
    """
    Integrate dm/dt = omega(t) x m from ``s0`` with the adaptive DOP853 pair
    and resample onto ``grid``. A failed step-size control raises
    IntegrationError carrying the last time reached.

    The grid is walked in segments of ``TOL.aux_segment_turns`` precession
    turns; m is put back on the unit sphere between segments, and
    ``norm_residual`` records the drift before that projection.
    """
    t = _as_grid(grid)
    rtol = TOL.rtol if rtol is None else rtol
    atol = TOL.atol if atol is None else atol

    def rhs(time, m):
        return np.cross(omega_vector(sample(spec, time)), m)

    w = spec.reference_omega0
    length = TOL.aux_segment_turns * 2.0 * math.pi / w if w > 0 else math.inf
    m = np.empty((t.size, 3))
    m[0] = start = s0.unit_vector()
    nfev = 0
    for i, j in _segments(t, length):
        sol = solve_ivp(rhs, (t[i], t[j]), start, method="DOP853",
                        t_eval=t[i:j + 1], rtol=rtol, atol=atol)
        if sol.status != 0 or sol.y.shape[1] != j - i + 1:
            reached = float(sol.t[-1]) if sol.t.size else float(t[i])
            raise IntegrationError(f"auxiliary integration failed: {sol.message}", t=reached)
        m[i + 1:j + 1] = sol.y.T[1:]
        start = m[j] / np.linalg.norm(m[j])
        nfev += sol.nfev

    samples = [sample(spec, float(tk)) for tk in t]
    omega = np.array([omega_vector(d) for d in samples])
    axes = np.array([axis_vector(d) for d in samples])
    m_dot = np.cross(omega, m)

    lam = np.arctan2(np.hypot(m[:, 0], m[:, 1]), m[:, 2])
    traj = AuxTrajectory(
        spec=spec,
        t=t,
        lam=lam,
        gamma=_read_gamma(m, s0.gamma),
        m=m,
        omega=omega,
        f=np.einsum("ij,ij->i", m, axes),
        geo_rate=_geometric_rate(m, m_dot),
        dyn_rate=np.einsum("ij,ij->i", m, omega),
        norm_residual=np.abs(np.linalg.norm(m, axis=1) - 1.0),
    )
    logger.debug(f"Auxiliary trajectory: {t.size} nodes, {nfev} rhs evaluations, "
                 f"max |f| = {traj.f_max_abs:.3e}")
    if spec.kind != "constant" and traj.f_max_abs > 1e-6 and abs(traj.f[0]) <= 1e-9:
        logger.warning(f"f = m.n drifts to {traj.f_max_abs:.3e} on a time-dependent axis; "
                       f"the dynamical phase does not vanish")
    return traj


# --- invariant and transformation -------------------------------------------

def invariant_matrix(s: AuxState) -> Mat2:
    """I = 1/4 sin lam e^{-i gam} sigma_+ + 1/4 sin lam e^{i gam} sigma_- + 1/2 cos lam sigma_3."""
    return 0.5 * sigma_dot(s.unit_vector())


def vt_unitary(s: AuxState) -> Mat2:
    """
    V = exp[(beta/2) sigma_+ - (beta*/2) sigma_-] with beta = -(lam/2) e^{-i gam};
    a rotation by lam about (-sin gam, cos gam, 0), so V|up> is the +1/2
    eigenvector of I.
    """
    return expm_su2((-math.sin(s.gamma), math.cos(s.gamma), 0.0), s.lam)


def _vt_derivative(s: AuxState, lam_dot: float, gamma_dot: float) -> Mat2:
    c, sn = math.cos(0.5 * s.lam), math.sin(0.5 * s.lam)
    e_minus = complex(math.cos(s.gamma), -math.sin(s.gamma))
    e_plus = e_minus.conjugate()
    d_lam = 0.5 * np.array([[-sn, -c * e_minus], [c * e_plus, -sn]], dtype=np.complex128)
    d_gam = np.array([[0.0, 1j * sn * e_minus], [1j * sn * e_plus, 0.0]], dtype=np.complex128)
    return lam_dot * d_lam + gamma_dot * d_gam


def hv_direct(s: AuxState, d: DriveSample, lam_dot: float, gamma_dot: float) -> Mat2:
    """V^dag H V - i V^dag dV/dt, with dV/dt through the given angle rates."""
    v = vt_unitary(s)
    vd = dagger(v)
    return vd @ hamiltonian(d) @ v - 1j * vd @ _vt_derivative(s, lam_dot, gamma_dot)


def hv_effective(s: AuxState, d: DriveSample, gamma_dot: float) -> Mat2:
    """
    Diagonal effective Hamiltonian 1/2 {omega0 f + dgam/dt (1 - cos lam)} sigma_3.

    The direct conjugation is checked alongside, with dlam/dt from the
    auxiliary equations; its off-diagonal part only vanishes when
    ``gamma_dot`` is consistent with them.
    """
    f = float(np.dot(s.unit_vector(), axis_vector(d)))
    closed = 0.5 * (d.omega0 * f + gamma_dot * (1.0 - math.cos(s.lam))) * pauli(3)
    lam_dot, _ = aux_rhs(s, d)
    direct = hv_direct(s, d, lam_dot, gamma_dot)
    off = max(abs(direct[0, 1]), abs(direct[1, 0]))
    if off > TOL.hv_offdiagonal * max(1.0, d.omega0):
        raise ConsistencyError(f"effective Hamiltonian is not diagonal (off-diagonal {off:.3e}); "
                               f"auxiliary equations do not hold at this state")
    return closed


# --- phases and solution ----------------------------------------------------

def phase_decompose(traj: AuxTrajectory) -> PhaseDecomposition:
    """
    geometric_sigma = -sigma int dgam/dt (1 - cos lam) dt
    dynamical_sigma = -sigma int omega0 f dt
    by composite Simpson on the trajectory grid.
    """
    geo = cumulative_simpson(traj.geo_rate, x=traj.t, initial=0.0)
    dyn = cumulative_simpson(traj.dyn_rate, x=traj.t, initial=0.0)
    return PhaseDecomposition(t=traj.t, geometric_up=-0.5 * geo, dynamical_up=-0.5 * dyn)


def _phase_at(traj: AuxTrajectory, phases: PhaseDecomposition, t: float) -> Tuple[float, float]:
    k = traj.node_index(t)
    if k is not None:
        return float(phases.total_up[k]), float(phases.total_down[k])
    up = float(CubicSpline(traj.t, phases.total_up)(t))
    return up, -up


def branch_coefficients(traj: AuxTrajectory, psi0: Spinor) -> Spinor:
    """C_sigma = <sigma, t=0|Psi(0)>."""
    return dagger(vt_unitary(traj.state(0))) @ np.asarray(psi0, dtype=np.complex128)


def assemble_solution(traj: AuxTrajectory, psi0: Spinor, t: float,
                      phases: Optional[PhaseDecomposition] = None) -> Spinor:
    """Psi(t) = sum_sigma C_sigma exp(i phi_sigma(t)) V(t)|sigma>."""
    phases = phase_decompose(traj) if phases is None else phases
    coeffs = branch_coefficients(traj, psi0)
    up, down = _phase_at(traj, phases, t)
    weights = np.array([coeffs[0] * np.exp(1j * up), coeffs[1] * np.exp(1j * down)])
    return vt_unitary(traj.at(t)) @ weights


def assemble_states(traj: AuxTrajectory, psi0: Spinor,
                    phases: Optional[PhaseDecomposition] = None) -> np.ndarray:
    """assemble_solution at every node, shape (N, 2)."""
    phases = phase_decompose(traj) if phases is None else phases
    coeffs = branch_coefficients(traj, psi0)
    totals = np.column_stack([phases.total(b) for b in BRANCHES])
    out = np.empty((len(traj), 2), dtype=np.complex128)
    for k in range(len(traj)):
        out[k] = vt_unitary(traj.state(k)) @ (coeffs * np.exp(1j * totals[k]))
    return out


def branch_state(traj: AuxTrajectory, branch: SpinBranch, k: int) -> Spinor:
    """V(t_k)|sigma>, the eigenvector of I(t_k) for ``branch``."""
    return vt_unitary(traj.state(k))[:, branch.index].copy()


# --- initial conditions -----------------------------------------------------

def paper_mode(spec: DriveSpec) -> AuxState:
    """Axis orthogonal to the drive at t = 0, so f(0) = 0."""
    d = sample(spec, spec.t_span[0] if spec.t_span else 0.0)
    half = 0.5 * math.pi
    if d.theta < half:
        return AuxState(lam=d.theta + half, gamma=d.phi)
    if d.theta > half:
        return AuxState(lam=d.theta - half, gamma=d.phi)
    return AuxState(lam=half, gamma=d.phi + half)


def aligned_mode(spec: DriveSpec) -> AuxState:
    """Axis along the drive at t = 0, so f(0) = 1."""
    d = sample(spec, spec.t_span[0] if spec.t_span else 0.0)
    return AuxState(lam=d.theta, gamma=d.phi)


def initial_state(spec: DriveSpec, mode: str, lam0: Optional[float] = None,
                  gamma0: Optional[float] = None) -> AuxState:
    if mode == "paper_mode":
        return paper_mode(spec)
    if mode == "aligned_mode":
        return aligned_mode(spec)
    if mode == "angles":
        if lam0 is None or gamma0 is None:
            raise UsageError("initializer 'angles' needs both lambda0 and gamma0")
        return AuxState(lam=lam0, gamma=gamma0)
    raise UsageError(f"unknown initializer {mode!r}; expected one of {', '.join(INITIALIZERS)}")


def trajectory_frame(traj: AuxTrajectory, phases: PhaseDecomposition) -> pd.DataFrame:
    return pd.DataFrame({
        "t": traj.t,
        "lambda": traj.lam,
        "gamma": traj.gamma,
        "f": traj.f,
        "phi_geo_up": phases.geometric_up,
        "phi_dyn_up": phases.dynamical_up,
        "phi_total_up": phases.total_up,
        "norm_residual": traj.norm_residual,
    }, columns=TRAJECTORY_COLUMNS)
