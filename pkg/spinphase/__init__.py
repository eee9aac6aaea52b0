"""
spinphase
---------
Gravitomagnetic fields of rotating frames and exact invariant-based solutions
of the time-dependent spin-rotation Schrodinger equation.
"""

from spinphase.services.service import SpinPhaseService, run_evolve, run_field, run_sweep

__version__ = "0.1.0"

__all__ = ["SpinPhaseService", "run_field", "run_evolve", "run_sweep", "__version__"]
