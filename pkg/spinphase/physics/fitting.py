#!/usr/bin/env python3
"""
spinphase/physics/fitting.py
------------------------------
Least-squares helpers shared by convergence studies and field fits.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score

from spinphase.core.errors import UsageError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PowerLawFit:
    """y ~ prefactor * x**exponent."""
    exponent: float
    prefactor: float
    r_squared: float


@dataclass(frozen=True)
class ProportionalFit:
    """y ~ slope * x (no intercept)."""
    slope: float
    r_squared: float


def fit_power_law(x: Sequence[float], y: Sequence[float]) -> PowerLawFit:
    """Fit log|y| = log(prefactor) + exponent * log|x|."""
    x = np.abs(np.asarray(x, dtype=float))
    y = np.abs(np.asarray(y, dtype=float))
    if x.size < 2 or x.size != y.size:
        raise UsageError(f"power-law fit needs at least two paired samples (got {x.size}, {y.size})")
    if np.any(x <= 0) or np.any(y <= 0):
        raise UsageError("power-law fit needs strictly non-zero samples")

    log_x = np.log(x).reshape(-1, 1)
    log_y = np.log(y)
    model = LinearRegression().fit(log_x, log_y)
    r2 = r2_score(log_y, model.predict(log_x)) if x.size > 2 else 1.0
    return PowerLawFit(
        exponent=float(model.coef_[0]),
        prefactor=float(np.exp(model.intercept_)),
        r_squared=float(r2),
    )


def fit_proportional(x: Sequence[float], y: Sequence[float]) -> ProportionalFit:
    """Least-squares slope through the origin."""
    x = np.asarray(x, dtype=float).reshape(-1, 1)
    y = np.asarray(y, dtype=float)
    if x.shape[0] < 1 or x.shape[0] != y.size:
        raise UsageError("proportional fit needs paired samples")
    model = LinearRegression(fit_intercept=False).fit(x, y)
    r2 = r2_score(y, model.predict(x)) if y.size > 1 and np.ptp(y) > 0 else 1.0
    return ProportionalFit(slope=float(model.coef_[0]), r_squared=float(r2))


def convergence_order(steps: Sequence[float], errors: Sequence[float]) -> float:
    """Observed order p in error ~ C * step**p from a step-refinement study."""
    order = fit_power_law(steps, errors).exponent
    logger.debug(f"Observed convergence order {order:.3f} over {len(steps)} refinements")
    return order
