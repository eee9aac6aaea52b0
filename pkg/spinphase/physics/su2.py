#!/usr/bin/env python3
"""
spinphase/physics/su2.py
--------------------------
Exact complex 2x2 algebra: Pauli matrices, commutators, Hermitian
eigen-decomposition and closed-form SU(2) exponentials.

Mat2 is a complex128 array of shape (2, 2); Spinor is complex128 of shape (2,)
holding amplitudes on the sigma_3 eigenbasis (up first).
"""

import math
from typing import Tuple, Union

import numpy as np

from spinphase.core.config import TOL
from spinphase.core.errors import DomainError, UsageError

Mat2 = np.ndarray
Spinor = np.ndarray

IDENTITY = np.eye(2, dtype=np.complex128)

_PAULI = {
    1: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    2: np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    3: np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
_PAULI["+"] = _PAULI[1] + 1j * _PAULI[2]
_PAULI["-"] = _PAULI[1] - 1j * _PAULI[2]
for _m in _PAULI.values():
    _m.setflags(write=False)

_ALIASES = {"1": 1, "2": 2, "3": 3, "x": 1, "y": 2, "z": 3, "+": "+", "-": "-", "−": "-"}


def pauli(k: Union[int, str]) -> Mat2:
    """
    Return sigma_1, sigma_2, sigma_3, or the ladder combinations
    sigma_+- = sigma_1 +- i sigma_2 (so sigma_+ = [[0, 2], [0, 0]]).
    """
    key = _ALIASES.get(k) if isinstance(k, str) else k
    if isinstance(key, bool) or key not in _PAULI:
        raise UsageError(f"Invalid Pauli index {k!r}; expected 1, 2, 3, '+' or '-'")
    return _PAULI[key].copy()


def spinor(c_up: complex, c_down: complex) -> Spinor:
    return np.array([c_up, c_down], dtype=np.complex128)


def dagger(a: Mat2) -> Mat2:
    return np.conj(a).T


def commutator(a: Mat2, b: Mat2) -> Mat2:
    return a @ b - b @ a


def sigma_dot(vec) -> Mat2:
    """vec . sigma for a real (or complex) 3-vector."""
    return vec[0] * _PAULI[1] + vec[1] * _PAULI[2] + vec[2] * _PAULI[3]


def max_norm(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(a: Mat2, tol: float = TOL.hermitian) -> bool:
    return max_norm(a - dagger(a)) <= tol * max(max_norm(a), np.finfo(float).tiny)


def is_unitary(u: Mat2, tol: float = TOL.unitary) -> bool:
    return max_norm(dagger(u) @ u - IDENTITY) <= tol


def expm_su2(axis, angle: float) -> Mat2:
    """
    exp(-i * angle * (axis . sigma) / 2)
      = cos(angle/2) I - i sin(angle/2) (axis . sigma)
    for a unit ``axis``. The result is unitary with unit determinant.
    """
    n = np.asarray(axis, dtype=float)
    norm = float(np.linalg.norm(n))
    if n.shape != (3,) or abs(norm - 1.0) > TOL.unit_axis:
        raise DomainError(f"expm_su2 needs a unit 3-vector axis (|axis|={norm!r})")
    half = 0.5 * angle
    return math.cos(half) * IDENTITY - 1j * math.sin(half) * sigma_dot(n)


def _fix_phase(vec: Spinor) -> Spinor:
    # largest-magnitude component real and positive; ties go to the first index
    mags = np.abs(vec)
    idx = int(np.flatnonzero(mags >= mags.max() - TOL.eig_phase_tie)[0])
    return vec * (np.conj(vec[idx]) / mags[idx])


def herm_eig2(a: Mat2) -> Tuple[np.ndarray, Mat2]:
    """
    Eigen-decomposition of a Hermitian 2x2 matrix.

    Returns ``(evals, evecs)`` with eigenvalues ascending and eigenvectors as
    the columns of ``evecs``. Each eigenvector has its largest-magnitude
    component real and positive. Near-degenerate input returns the
    canonical basis.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.shape != (2, 2):
        raise DomainError(f"herm_eig2 needs a 2x2 matrix (got shape {a.shape})")
    scale = max_norm(a)
    if max_norm(a - dagger(a)) > TOL.hermitian * max(scale, np.finfo(float).tiny):
        raise DomainError("herm_eig2 needs a Hermitian matrix")

    evals, evecs = np.linalg.eigh(a)
    if evals[1] - evals[0] < TOL.degenerate_gap * max(1.0, scale):
        return evals, IDENTITY.copy()

    out = np.empty((2, 2), dtype=np.complex128)
    for k in range(2):
        out[:, k] = _fix_phase(evecs[:, k])
    return evals, out
