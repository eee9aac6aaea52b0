#!/usr/bin/env python3
"""
spinphase/physics/direct_solver.py
------------------------------------
Brute-force reference: fixed-substep classical RK4 on i dPsi/dt = H(t) Psi,
plus the residual of the invariant equation dI/dt = i [I, H].

Norms are reported, never corrected.
"""

import logging
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from spinphase.core.config import DEFAULT_SUBSTEPS, TOL
from spinphase.core.errors import DomainError, UsageError
from spinphase.models.entities import EvolutionResult
from spinphase.physics.drive import DriveSpec, hamiltonian, sample
from spinphase.physics.lr_solver import AuxTrajectory, invariant_matrix
from spinphase.physics.su2 import Mat2, Spinor, commutator, expm_su2

logger = logging.getLogger(__name__)

EVOLUTION_COLUMNS = ["t", "re_up", "im_up", "re_down", "im_down", "norm"]


def evolve_direct(spec: DriveSpec, psi0: Spinor, grid: Sequence[float],
                  substeps: Optional[int] = None, check_norm: bool = True) -> EvolutionResult:
    """
    Integrate the Schrodinger equation over ``grid`` with ``substeps`` equal
    RK4 steps per output interval.
    """
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
        raise UsageError("time grid needs at least two strictly increasing nodes")
    substeps = DEFAULT_SUBSTEPS if substeps is None else int(substeps)
    if substeps < 1:
        raise UsageError(f"substeps must be positive (got {substeps})")

    psi = np.asarray(psi0, dtype=np.complex128).copy()
    norm0 = float(np.linalg.norm(psi))
    if check_norm and abs(norm0 - 1.0) > TOL.spinor_norm:
        raise DomainError(f"initial state is not normalized (|psi0| = {norm0!r})")

    def deriv(time: float, state: Spinor) -> Spinor:
        return -1j * (hamiltonian(sample(spec, time)) @ state)

    states = np.empty((t.size, 2), dtype=np.complex128)
    states[0] = psi
    for k in range(t.size - 1):
        h = (t[k + 1] - t[k]) / substeps
        time = t[k]
        for j in range(substeps):
            k1 = deriv(time, psi)
            k2 = deriv(time + 0.5 * h, psi + 0.5 * h * k1)
            k3 = deriv(time + 0.5 * h, psi + 0.5 * h * k2)
            k4 = deriv(time + h, psi + h * k3)
            psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            time = t[k] + (j + 1) * h
        states[k + 1] = psi

    norms = np.linalg.norm(states, axis=1)
    result = EvolutionResult(t=t, states=states, norms=norms, substeps=substeps,
                             total_steps=substeps * (t.size - 1))
    if result.max_norm_drift > 1e-9:
        logger.warning(f"Direct evolution norm drifted by {result.max_norm_drift:.3e}")
    logger.debug(f"Direct evolution: {result.total_steps} RK4 steps")
    return result


def propagate_constant(h: Mat2, psi0: Spinor, t: float) -> Spinor:
    """exp(-i H t) psi0 for a time-independent 2x2 Hermitian H."""
    h = np.asarray(h, dtype=np.complex128)
    trace_half = 0.5 * float(np.real(h[0, 0] + h[1, 1]))
    omega = np.array([2.0 * h[0, 1].real, -2.0 * h[0, 1].imag, float(np.real(h[0, 0] - h[1, 1]))])
    w = float(np.linalg.norm(omega))
    psi0 = np.asarray(psi0, dtype=np.complex128)
    global_phase = np.exp(-1j * trace_half * t)
    if w == 0.0:
        return global_phase * psi0
    return global_phase * (expm_su2(omega / w, w * t) @ psi0)


def invariant_residual(traj: AuxTrajectory) -> float:
    """
    max over interior nodes of ||dI/dt - i [I, H]||_max, with dI/dt by the
    centred fourth-order stencil. Needs a uniform grid of at least five nodes.
    """
    n = len(traj)
    if n < 5:
        raise UsageError(f"invariant residual needs at least 5 nodes (got {n})")
    steps = np.diff(traj.t)
    h = float(np.mean(steps))
    if np.max(np.abs(steps - h)) > 1e-9 * h:
        raise UsageError("invariant residual needs a uniform time grid")

    inv = np.array([invariant_matrix(traj.state(k)) for k in range(n)])
    worst = 0.0
    for k in range(2, n - 2):
        d_inv = (-inv[k + 2] + 8.0 * inv[k + 1] - 8.0 * inv[k - 1] + inv[k - 2]) / (12.0 * h)
        ham = hamiltonian(traj.drive_sample(k))
        worst = max(worst, float(np.max(np.abs(d_inv - 1j * commutator(inv[k], ham)))))
    return worst


def evolution_frame(result: EvolutionResult) -> pd.DataFrame:
    return pd.DataFrame({
        "t": result.t,
        "re_up": result.states[:, 0].real,
        "im_up": result.states[:, 0].imag,
        "re_down": result.states[:, 1].real,
        "im_down": result.states[:, 1].imag,
        "norm": result.norms,
    }, columns=EVOLUTION_COLUMNS)
