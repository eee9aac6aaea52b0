#!/usr/bin/env python3
"""
spinphase/services/service.py
-------------------------------
Runs field, evolve and sweep scenarios end to end and writes their artifacts.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from spinphase.core.config import N_JOBS
from spinphase.core.errors import (
    EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, ConfigError, SpinPhaseError, UsageError,
)
from spinphase.core.scenario import ScenarioConfig, load_scenario
from spinphase.physics.analysis import (
    berry_cycle_grid, berry_limit_table, check_berry_rates, compare, linear_response,
    observed_phase_difference, summary_dict,
)
from spinphase.physics.direct_solver import evolution_frame, evolve_direct
from spinphase.physics.drive import DriveSpec
from spinphase.physics.gravitomag import (
    FieldGrid, check_frame_validity, cross_term_approx, cross_term_exact, field_grid, fit_dipole,
    frame_field_deviation,
)
from spinphase.physics.lr_solver import (
    branch_coefficients, initial_state, integrate_aux, phase_decompose, trajectory_frame, vt_unitary,
)
from spinphase.physics.su2 import spinor
from spinphase.utils.export import write_csv, write_json

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["index", "parameter", "value", "status", "min_fidelity", "dphi_geometric",
                 "dphi_dynamical", "dphi_total", "f_max_abs"]


@dataclass
class RunOutcome:
    """Exit code, written files and the summary of one command."""
    command: str
    exit_code: int
    paths: List[Path] = field(default_factory=list)
    summary: Dict = field(default_factory=dict)


@dataclass
class MemberResult:
    index: int
    value: float
    status: str
    exit_code: int
    summary: Dict = field(default_factory=dict)
    message: str = ""


class SpinPhaseService:
    """Scenario runner; ``tol`` overrides the auxiliary integrator tolerance."""

    def __init__(self, output_dir: Optional[Path] = None, tol: Optional[float] = None,
                 n_jobs: Optional[int] = None, progress: bool = True):
        self.output_dir = Path(output_dir) if output_dir is not None else None
        self.tol = tol
        self.n_jobs = n_jobs
        self.progress = progress

    def _out_dir(self, cfg: ScenarioConfig) -> Path:
        out = self.output_dir if self.output_dir is not None else cfg.output_dir
        out.mkdir(parents=True, exist_ok=True)
        return out

    def _tolerances(self, cfg: ScenarioConfig):
        if self.tol is None:
            return cfg.rtol, cfg.atol
        return self.tol, min(cfg.atol, 1e-2 * self.tol)

    # --- field -------------------------------------------------------------

    def run_field(self, cfg: ScenarioConfig) -> RunOutcome:
        fs = cfg.require("field_settings", "field")
        spec = cfg.require("grid", "grid")
        grid = FieldGrid.build(**asdict(spec))
        points = grid.points()
        n_jobs = self.n_jobs if self.n_jobs is not None else N_JOBS
        logger.info(f"[{cfg.name}] evaluating field on {len(grid)} points")

        df = field_grid(fs.kerr, fs.frame, grid, fs.mass, h_rel=fs.rel_step, n_jobs=n_jobs)
        deviation = frame_field_deviation(fs.frame, points, h_rel=fs.rel_step)
        dipole = fit_dipole(fs.kerr, points, h_rel=fs.rel_step)

        frame_valid = check_frame_validity(fs.frame, points)
        rel_errors = []
        for x in points:
            exact = cross_term_exact(fs.kerr, fs.frame, x, check=False)
            if exact != 0.0:
                rel_errors.append(abs(cross_term_approx(fs.kerr, fs.frame, x) - exact) / abs(exact))

        summary = {
            "scenario": cfg.name,
            "grid_points": len(grid),
            "frame_field_max_deviation": deviation,
            "dipole_amplitude": dipole.amplitude,
            "dipole_constant": dipole.constant,
            "dipole_expected_constant": dipole.expected_constant,
            "dipole_quoted_constant": dipole.quoted_constant,
            "dipole_quoted_ratio": dipole.quoted_ratio,
            "dipole_r_squared": dipole.r_squared,
            "falloff_exponent": dipole.falloff_exponent,
            "cross_term_max_rel_error": max(rel_errors) if rel_errors else None,
            "frame_expansion_valid": frame_valid,
        }
        out = self._out_dir(cfg)
        paths = [write_csv(df, out / f"{cfg.name}_field.csv"),
                 write_json(summary, out / f"{cfg.name}_summary.json")]
        return RunOutcome("field", EXIT_OK, paths, summary)

    # --- evolve ------------------------------------------------------------

    def _evolve(self, cfg: ScenarioConfig, drive: DriveSpec, name: str, out: Path,
                t_end: float, nodes: int, mode: str, extra: Optional[Dict] = None) -> RunOutcome:
        t0 = drive.t_span[0] if drive.t_span else 0.0
        grid = np.linspace(t0, t0 + t_end, nodes)
        rtol, atol = self._tolerances(cfg)

        s0 = initial_state(drive, mode, cfg.lam0, cfg.gamma0)
        traj = integrate_aux(drive, s0, grid, rtol=rtol, atol=atol)
        phases = phase_decompose(traj)

        psi0 = cfg.psi0
        if psi0 is None:
            # equal weight on both invariant branches so their phase difference is observable
            psi0 = vt_unitary(s0) @ (spinor(1.0, 1.0) / math.sqrt(2.0))
        evolution = evolve_direct(drive, psi0, grid, substeps=cfg.substeps)
        report = compare(traj, evolution, psi0, scenario=name, phases=phases)

        details = dict(extra or {})
        coeffs = branch_coefficients(traj, psi0)
        if np.min(np.abs(coeffs)) > 1e-6:
            details["dphi_observed_direct"] = float(observed_phase_difference(traj, evolution.states)[-1])
        summary = summary_dict(report, extra=details)

        paths = [write_csv(trajectory_frame(traj, phases), out / f"{name}_trajectory.csv"),
                 write_csv(evolution_frame(evolution), out / f"{name}_direct.csv"),
                 write_json(summary, out / f"{name}_summary.json")]

        code = EXIT_OK
        if report.min_fidelity < cfg.fidelity_threshold:
            k = int(np.argmin(report.fidelity))
            logger.error(f"[{name}] fidelity {report.min_fidelity:.12f} at t={report.t[k]:.6g} "
                         f"is below the threshold {cfg.fidelity_threshold:.12f}")
            code = EXIT_VALIDATION
        return RunOutcome("evolve", code, paths, summary)

    def _time_settings(self, cfg: ScenarioConfig):
        cfg.require("drive", "drive")
        t_end = cfg.require("t_end", "time.t_end")
        nodes = cfg.require("nodes", "time.nodes")
        return t_end, nodes

    def run_evolve(self, cfg: ScenarioConfig) -> RunOutcome:
        t_end, nodes = self._time_settings(cfg)
        return self._evolve(cfg, cfg.drive, cfg.name, self._out_dir(cfg), t_end, nodes, cfg.initializer)

    # --- sweep -------------------------------------------------------------

    def run_member(self, cfg: ScenarioConfig, index: int, value: float, out: Path) -> MemberResult:
        """One sweep member; failures are captured, never raised."""
        sweep = cfg.sweep
        name = f"{cfg.name}_baseline" if index < 0 else f"{cfg.name}_{index:03d}"
        try:
            drive = replace(cfg.drive, **{sweep.parameter: value})
            t_end, nodes = cfg.t_end, cfg.nodes
            mode = cfg.initializer
            if sweep.study == "berry":
                mode = "aligned_mode"
                t_end, nodes = berry_cycle_grid(drive, value, sweep.nodes_per_period)
            outcome = self._evolve(cfg, drive, name, out, t_end, nodes, mode,
                                   extra={sweep.parameter: value})
        except SpinPhaseError as exc:
            logger.error(f"[{name}] failed: {exc}")
            return MemberResult(index, value, "error", exc.exit_code, message=str(exc))
        status = "ok" if outcome.exit_code == EXIT_OK else "validation"
        return MemberResult(index, value, status, outcome.exit_code, outcome.summary)

    def run_sweep(self, cfg: ScenarioConfig) -> RunOutcome:
        sweep = cfg.require("sweep", "sweep")
        drive = cfg.require("drive", "drive")
        if drive.kind == "sampled":
            raise ConfigError("sampled drives cannot be swept", key="drive.kind", path=str(cfg.path))
        if sweep.study == "response" and drive.kind != "modulated":
            raise ConfigError("response study needs a modulated drive", key="drive.kind", path=str(cfg.path))
        if sweep.study == "berry" and drive.kind != "conical":
            raise ConfigError("berry study needs a conical drive", key="drive.kind", path=str(cfg.path))
        if sweep.study != "berry":
            self._time_settings(cfg)
        if sweep.study == "berry":
            try:
                check_berry_rates(sweep.values)
            except UsageError as exc:
                raise ConfigError(f"berry study: {exc}", key="sweep.values", path=str(cfg.path)) from exc

        out = self._out_dir(cfg)
        jobs = list(enumerate(sweep.values))
        if sweep.study == "response":
            jobs.append((-1, 0.0))
        n_jobs = self.n_jobs if self.n_jobs is not None else sweep.n_jobs

        runner = Parallel(n_jobs=n_jobs, return_as="generator")(
            delayed(self.run_member)(cfg, index, value, out) for index, value in jobs)
        members = list(tqdm(runner, total=len(jobs), desc=f"sweep {cfg.name}", disable=not self.progress))
        members.sort(key=lambda m: (m.index < 0, m.index))
        baseline = next((m for m in members if m.index < 0), None)
        members = [m for m in members if m.index >= 0]

        table = self._aggregate(sweep.parameter, members)
        summary = {"scenario": cfg.name, "study": sweep.study, "parameter": sweep.parameter,
                   "members": len(members), "failed": int((table["status"] != "ok").sum())}
        if sweep.study == "berry":
            self._berry_columns(table, drive, summary)
        if sweep.study == "response":
            self._response_columns(table, baseline, summary)

        paths = [write_csv(table, out / f"{cfg.name}_sweep.csv"),
                 write_json(summary, out / f"{cfg.name}_sweep_summary.json")]

        codes = [m.exit_code for m in members] + ([baseline.exit_code] if baseline else [])
        code = EXIT_OK
        if any(c not in (EXIT_OK, EXIT_VALIDATION) for c in codes):
            code = EXIT_NUMERICAL if EXIT_NUMERICAL in codes else EXIT_CONFIG
        elif EXIT_VALIDATION in codes:
            code = EXIT_VALIDATION
        if code != EXIT_OK:
            logger.error(f"[{cfg.name}] {summary['failed']} of {len(members)} sweep members failed")
        return RunOutcome("sweep", code, paths, summary)

    @staticmethod
    def _aggregate(parameter: str, members: List[MemberResult]) -> pd.DataFrame:
        rows = []
        for m in members:
            s = m.summary
            rows.append([m.index, parameter, m.value, m.status, s.get("min_fidelity", np.nan),
                         s.get("dphi_geometric", np.nan), s.get("dphi_dynamical", np.nan),
                         s.get("dphi_total", np.nan), s.get("f_max_abs", np.nan)])
        table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
        table["geometric_up"] = [m.summary.get("phases", {}).get("geometric_up", np.nan) for m in members]
        return table

    @staticmethod
    def _berry_columns(table: pd.DataFrame, drive: DriveSpec, summary: Dict):
        table["nu_ratio"] = table["value"] / drive.omega0
        table["deviation"] = np.nan
        done = table["geometric_up"].notna()
        if not done.any():
            return
        limit = berry_limit_table(drive, table.loc[done, "value"], table.loc[done, "geometric_up"])
        table.loc[done, "deviation"] = limit.table["deviation"].to_numpy()
        summary["expected_geometric_up"] = limit.expected
        if limit.exponent is not None:
            summary["convergence_exponent"] = limit.exponent
            summary["convergence_r_squared"] = limit.r_squared
        summary["deviation_monotone"] = limit.monotone

    @staticmethod
    def _response_columns(table: pd.DataFrame, baseline: Optional[MemberResult], summary: Dict):
        if baseline is None or baseline.status == "error":
            table["shift"] = np.nan
            logger.warning("Response study has no baseline; shifts not computed")
            return
        table["shift"] = table["dphi_total"] - baseline.summary["dphi_total"]
        summary["baseline_dphi_total"] = baseline.summary["dphi_total"]
        ok = table["shift"].notna()
        if ok.sum() >= 2:
            fit = linear_response(table.loc[ok, "value"], table.loc[ok, "shift"])
            summary["response_slope"] = fit.slope
            summary["response_r_squared"] = fit.r_squared
            summary["response_exponent"] = fit.exponent


# Module-level convenience functions
_service_instance = None


def get_service(**kwargs) -> SpinPhaseService:
    """Shared SpinPhaseService; keyword arguments force a fresh instance."""
    global _service_instance
    if _service_instance is None or kwargs:
        _service_instance = SpinPhaseService(**kwargs)
    return _service_instance


def _scenario(source) -> ScenarioConfig:
    return source if isinstance(source, ScenarioConfig) else load_scenario(source)


def run_field(source) -> RunOutcome:
    return get_service().run_field(_scenario(source))


def run_evolve(source) -> RunOutcome:
    return get_service().run_evolve(_scenario(source))


def run_sweep(source) -> RunOutcome:
    return get_service().run_sweep(_scenario(source))
