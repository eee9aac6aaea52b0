#!/usr/bin/env python3
"""
spinphase/physics/analysis.py
-------------------------------
Cross-validation of the invariant-based solution against direct integration,
spin-branch phase differences, adiabatic Berry-limit sweeps and the linear
response of the phase difference to drive modulation.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from spinphase.core.config import TOL
from spinphase.core.errors import DomainError, UsageError
from spinphase.models.entities import (
    ComparisonReport, EvolutionResult, PhaseDecomposition, PhaseDifference,
)
from spinphase.physics.direct_solver import invariant_residual
from spinphase.physics.drive import DriveSpec, axis_rate
from spinphase.physics.fitting import fit_power_law, fit_proportional
from spinphase.physics.lr_solver import (
    AuxTrajectory, aligned_mode, assemble_states, integrate_aux, invariant_matrix,
    phase_decompose, vt_unitary,
)
from spinphase.physics.su2 import Spinor, dagger

logger = logging.getLogger(__name__)

SUMMARY_KEYS = ["scenario", "min_fidelity", "dphi_geometric", "dphi_dynamical", "dphi_total",
                "f_max_abs", "convergence_exponent"]


def fidelity(a: Spinor, b: Spinor) -> float:
    """|<a|b>|^2 for unit spinors (within 1e-6)."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    for label, vec in (("a", a), ("b", b)):
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > TOL.fidelity_norm:
            raise DomainError(f"fidelity needs unit spinors (|{label}| = {norm!r})")
    return float(abs(np.vdot(a, b)) ** 2)


def interferometric_phase_difference(pd_: PhaseDecomposition) -> PhaseDifference:
    """Up-minus-down difference of each phase part, left unwrapped."""
    return PhaseDifference(
        t=pd_.t,
        geometric=pd_.geometric_up - pd_.geometric_down,
        dynamical=pd_.dynamical_up - pd_.dynamical_down,
        total=pd_.total_up - pd_.total_down,
    )


def observed_phase_difference(traj: AuxTrajectory, states: np.ndarray) -> np.ndarray:
    """
    Drift of arg(c_up conj(c_down)) where c = V(t)^dag Psi(t) are the
    amplitudes of ``states`` on the invariant eigenbasis. Needs both branches
    populated.
    """
    states = np.asarray(states, dtype=np.complex128)
    rel = np.empty(len(traj))
    for k in range(len(traj)):
        c = dagger(vt_unitary(traj.state(k))) @ states[k]
        rel[k] = np.angle(c[0] * np.conj(c[1]))
    rel = np.unwrap(rel)
    return rel - rel[0]


def adiabaticity(traj: AuxTrajectory) -> float:
    """Largest axis sweep rate |dn/dt| relative to omega0 over the grid."""
    worst = 0.0
    for k in range(len(traj)):
        d = traj.drive_sample(k)
        if d.omega0 > 0:
            worst = max(worst, float(np.linalg.norm(axis_rate(d))) / d.omega0)
    return worst


def eigenvalue_deviation(traj: AuxTrajectory) -> float:
    """max |eig(I) -/+ 1/2| along the trajectory."""
    worst = 0.0
    for k in range(len(traj)):
        evals = np.linalg.eigvalsh(invariant_matrix(traj.state(k)))
        worst = max(worst, float(np.max(np.abs(evals - np.array([-0.5, 0.5])))))
    return worst


def compare(traj: AuxTrajectory, evolution: EvolutionResult, psi0: Spinor,
            scenario: str = "scenario", phases: Optional[PhaseDecomposition] = None) -> ComparisonReport:
    """Node-by-node fidelity of the invariant solution against ``evolution``."""
    if evolution.t.shape != traj.t.shape or np.max(np.abs(evolution.t - traj.t)) > TOL.time_match * max(1.0, traj.t[-1]):
        raise UsageError("trajectory and direct evolution must share the time grid")
    phases = phase_decompose(traj) if phases is None else phases
    lr_states = assemble_states(traj, psi0, phases)
    fid = np.array([fidelity(lr_states[k], evolution.states[k]) for k in range(len(traj))])

    residual = None
    try:
        residual = invariant_residual(traj)
    except UsageError as exc:
        logger.info(f"Invariant residual skipped: {exc}")

    report = ComparisonReport(
        scenario=scenario,
        t=traj.t,
        fidelity=fid,
        phase_difference=interferometric_phase_difference(phases),
        phases=phases,
        f_max_abs=traj.f_max_abs,
        adiabaticity=adiabaticity(traj),
        invariant_residual=residual,
        eigenvalue_deviation=eigenvalue_deviation(traj),
        max_norm_drift=evolution.max_norm_drift,
    )
    logger.info(f"[{scenario}] min fidelity 1 - {1.0 - report.min_fidelity:.3e}, "
                f"dphi_total {report.phase_difference.total[-1]:.12f}")
    return report


def summary_dict(report: ComparisonReport, convergence_exponent: Optional[float] = None,
                 extra: Optional[Dict] = None) -> Dict:
    """JSON summary in fixed key order; ``convergence_exponent`` only when computed."""
    final = report.phase_difference.final()
    out = {
        "scenario": report.scenario,
        "min_fidelity": report.min_fidelity,
        "dphi_geometric": final["geometric"],
        "dphi_dynamical": final["dynamical"],
        "dphi_total": final["total"],
        "f_max_abs": report.f_max_abs,
    }
    if convergence_exponent is not None:
        out["convergence_exponent"] = convergence_exponent
    out.update({
        "adiabaticity": report.adiabaticity,
        "invariant_residual": report.invariant_residual,
        "eigenvalue_deviation": report.eigenvalue_deviation,
        "max_norm_drift": report.max_norm_drift,
        "phases": report.phases.final(),
    })
    if extra:
        out.update(extra)
    return out


# --- adiabatic limit --------------------------------------------------------

@dataclass(frozen=True)
class BerryLimitTable:
    """One row per precession rate; ``exponent`` from a log-log fit of deviation against nu/omega0."""
    table: pd.DataFrame
    expected: float
    exponent: Optional[float]
    r_squared: Optional[float] = None

    @property
    def monotone(self) -> bool:
        return bool(self.table["deviation"].is_monotonic_decreasing)


def check_berry_rates(nus: Sequence[float]) -> List[float]:
    nus = [float(v) for v in nus]
    if not nus or any(v <= 0 for v in nus) or any(b >= a for a, b in zip(nus, nus[1:])):
        raise UsageError(f"precession rates must be positive and strictly decreasing (got {nus})")
    return nus


def berry_cycle_grid(cone: DriveSpec, nu: float, nodes_per_period: int) -> Tuple[float, int]:
    """Span of one axis-precession period and the node count resolving ``nodes_per_period`` per spin turn."""
    t_end = 2.0 * math.pi / nu
    nodes = max(5, int(math.ceil(nodes_per_period * t_end / replace(cone, nu=nu).period())) + 1)
    return t_end, nodes


def berry_limit_table(cone: DriveSpec, nus: Sequence[float], phases: Sequence[float]) -> BerryLimitTable:
    """Deviation of one-cycle geometric phases from minus half the cone's solid angle."""
    nus = check_berry_rates(nus)
    expected = -math.pi * (1.0 - math.cos(cone.theta0))
    ratios = np.array(nus) / cone.omega0
    phases = np.asarray(phases, dtype=float)
    deviations = np.abs(phases - expected)
    table = pd.DataFrame({"nu_ratio": ratios, "geometric_up": phases, "deviation": deviations})

    exponent = r_squared = None
    if len(nus) >= 2 and np.all(deviations > 0):
        fit = fit_power_law(ratios, deviations)
        exponent, r_squared = fit.exponent, fit.r_squared
        logger.info(f"Berry-limit deviation falls off as (nu/omega0)^{exponent:.3f} (R^2 {r_squared:.6f})")
    return BerryLimitTable(table=table, expected=expected, exponent=exponent, r_squared=r_squared)


def _one_cycle_phase(cone: DriveSpec, nu: float, nodes_per_period: int) -> float:
    spec = replace(cone, nu=nu)
    t_end, n = berry_cycle_grid(cone, nu, nodes_per_period)
    traj = integrate_aux(spec, aligned_mode(spec), np.linspace(0.0, t_end, n))
    return float(phase_decompose(traj).geometric_up[-1])


def berry_limit_check(cone: DriveSpec, nus: Sequence[float], nodes_per_period: int = 32,
                      n_jobs: int = 1) -> BerryLimitTable:
    """
    Geometric phase of the up branch after one axis-precession period, for
    each rate in ``nus`` (positive, strictly decreasing), started aligned
    with the drive. Compared against minus half the cone's solid angle.
    """
    if cone.kind != "conical":
        raise UsageError(f"berry limit check needs a conical drive (got {cone.kind!r})")
    nus = check_berry_rates(nus)
    phases = Parallel(n_jobs=n_jobs)(
        delayed(_one_cycle_phase)(cone, nu, nodes_per_period) for nu in nus)
    return berry_limit_table(cone, nus, phases)


# --- linear response --------------------------------------------------------

@dataclass(frozen=True)
class ResponseFit:
    """shift ~ slope * eps; ``exponent`` is the log-log power (1 for linear response)."""
    slope: float
    r_squared: float
    exponent: Optional[float]


def linear_response(eps: Sequence[float], shifts: Sequence[float]) -> ResponseFit:
    eps = np.asarray(eps, dtype=float)
    shifts = np.asarray(shifts, dtype=float)
    if eps.size < 2:
        raise UsageError("linear response needs at least two modulation depths")
    prop = fit_proportional(eps, shifts)
    exponent = None
    if np.all(eps != 0) and np.all(shifts != 0):
        exponent = fit_power_law(eps, shifts).exponent
    return ResponseFit(slope=prop.slope, r_squared=prop.r_squared, exponent=exponent)
