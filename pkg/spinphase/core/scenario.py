#!/usr/bin/env python3
"""
spinphase/core/scenario.py
----------------------------
INI scenario files parsed into ScenarioConfig. The grammar is documented in
docs/CONFIG.md; relative paths resolve against the config file's directory.
"""

import configparser
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np

from spinphase.core.config import (
    C_LIGHT, DEFAULT_SUBSTEPS, FIDELITY_THRESHOLD, G_NEWTON, N_JOBS,
    NEUTRON_MASS, OUTPUT_DIR, TOL,
)
from spinphase.core.errors import ConfigError, SpinPhaseError
from spinphase.models.entities import KerrParams, RotFrame
from spinphase.physics.drive import KINDS, DriveSpec, load_drive_table
from spinphase.physics.lr_solver import INITIALIZERS
from spinphase.physics.su2 import spinor

logger = logging.getLogger(__name__)

STUDIES = ("plain", "berry", "response")


@dataclass(frozen=True)
class GridSpec:
    r_min: float
    r_max: float
    n_r: int
    theta_min: float
    theta_max: float
    n_theta: int
    phi_min: float = 0.0
    phi_max: float = 0.0
    n_phi: int = 1
    r_spacing: str = "log"


@dataclass(frozen=True)
class FieldSettings:
    kerr: KerrParams
    frame: RotFrame
    mass: float = NEUTRON_MASS
    rel_step: float = TOL.curl_rel_step


@dataclass(frozen=True)
class SweepSettings:
    parameter: str
    values: Tuple[float, ...]
    study: str = "plain"
    nodes_per_period: int = 32
    n_jobs: int = N_JOBS


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a field, evolve or sweep run needs. Unused sections stay None."""
    name: str
    path: Path
    output_dir: Path
    drive: Optional[DriveSpec] = None
    initializer: str = "paper_mode"
    lam0: Optional[float] = None
    gamma0: Optional[float] = None
    psi0: Optional[np.ndarray] = field(default=None, compare=False)
    t_end: Optional[float] = None
    nodes: Optional[int] = None
    rtol: float = TOL.rtol
    atol: float = TOL.atol
    substeps: int = DEFAULT_SUBSTEPS
    fidelity_threshold: float = FIDELITY_THRESHOLD
    field_settings: Optional[FieldSettings] = None
    grid: Optional[GridSpec] = None
    sweep: Optional[SweepSettings] = None

    def require(self, attr: str, key: str):
        """Return a parsed section, or a ConfigError naming the missing key."""
        value = getattr(self, attr)
        if value is None:
            raise ConfigError(f"missing required section or key [{key}]", key=key,
                              path=str(self.path))
        return value


class _Reader:
    """Typed access to a ConfigParser with line-number diagnostics."""

    def __init__(self, path: Path):
        self.path = path
        self.text = path.read_text(encoding="utf-8")
        self.parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
        try:
            self.parser.read_string(self.text, source=str(path))
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            raise ConfigError(f"malformed config: {exc.message}", line=line, path=str(path)) from exc

    def line_of(self, section: str, key: Optional[str] = None) -> Optional[int]:
        in_section = False
        for number, raw in enumerate(self.text.splitlines(), start=1):
            stripped = raw.strip()
            header = re.match(r"^\[(.+)\]$", stripped)
            if header:
                in_section = header.group(1).strip() == section
                if in_section and key is None:
                    return number
                continue
            if in_section and key is not None and re.match(rf"^{re.escape(key)}\s*[=:]", stripped, re.IGNORECASE):
                return number
        return None

    def error(self, section: str, key: Optional[str], message: str) -> ConfigError:
        name = f"{section}.{key}" if key else section
        return ConfigError(f"[{name}] {message}", key=name, line=self.line_of(section, key),
                           path=str(self.path))

    def has(self, section: str, key: Optional[str] = None) -> bool:
        if key is None:
            return self.parser.has_section(section)
        return self.parser.has_option(section, key)

    def raw(self, section: str, key: str, required: bool = True) -> Optional[str]:
        if not self.parser.has_section(section):
            if required:
                raise ConfigError(f"missing section [{section}] (needed for key '{key}')",
                                  key=f"{section}.{key}", path=str(self.path))
            return None
        if not self.parser.has_option(section, key):
            if required:
                raise ConfigError(f"[{section}] missing key '{key}'", key=f"{section}.{key}",
                                  line=self.line_of(section), path=str(self.path))
            return None
        return self.parser.get(section, key).strip()

    def typed(self, section: str, key: str, cast: Callable, default=None, required: bool = False,
              check: Optional[Callable] = None, requirement: str = ""):
        text = self.raw(section, key, required=required)
        if text is None:
            return default
        try:
            value = cast(text)
        except (TypeError, ValueError) as exc:
            raise self.error(section, key, f"cannot parse {text!r}: {exc}") from exc
        if check is not None and not check(value):
            raise self.error(section, key, f"value {text!r} {requirement}")
        return value

    def number(self, section: str, key: str, **kwargs) -> float:
        return self.typed(section, key, _finite_float, **kwargs)

    def integer(self, section: str, key: str, **kwargs) -> int:
        return self.typed(section, key, int, **kwargs)

    def floats(self, section: str, key: str, required: bool = True) -> List[float]:
        text = self.raw(section, key, required=required)
        if text is None:
            return []
        items = [item.strip() for item in text.split(",") if item.strip()]
        try:
            return [_finite_float(item) for item in items]
        except ValueError as exc:
            raise self.error(section, key, f"cannot parse {text!r}: {exc}") from exc


def _finite_float(text: str) -> float:
    value = float(_parse_angle(text))
    if not math.isfinite(value):
        raise ValueError("not finite")
    return value


def _parse_angle(text: str) -> float:
    """Plain float, or a multiple of pi written as 'pi', '0.5*pi', 'pi/3'."""
    text = text.strip().lower().replace(" ", "")
    match = re.fullmatch(r"([+-]?[0-9.e+-]*)\*?pi(?:/([0-9.e+-]+))?", text)
    if match and "pi" in text:
        factor = match.group(1)
        factor = 1.0 if factor in ("", "+") else -1.0 if factor == "-" else float(factor)
        divisor = float(match.group(2)) if match.group(2) else 1.0
        return factor * math.pi / divisor
    return float(text)


def _complex_pair(text: str) -> complex:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError("expected 're, im'")
    return complex(_finite_float(parts[0]), _finite_float(parts[1]))


# --- sections ---------------------------------------------------------------

def _parse_drive(rd: _Reader, base: Path):
    kind = rd.raw("drive", "kind")
    if kind not in KINDS:
        raise rd.error("drive", "kind", f"must be one of {', '.join(KINDS)} (got {kind!r})")
    try:
        if kind == "sampled":
            table_path = Path(rd.raw("drive", "table"))
            if not table_path.is_absolute():
                table_path = base / table_path
            if not table_path.exists():
                raise rd.error("drive", "table", f"file {table_path} does not exist")
            return DriveSpec.sampled(load_drive_table(table_path))

        omega0 = rd.number("drive", "omega0", required=True, check=lambda v: v >= 0,
                           requirement="must be non-negative")
        theta0 = rd.number("drive", "theta0", required=True, check=lambda v: 0 <= v <= math.pi,
                           requirement="must lie in [0, pi]")
        phi0 = rd.number("drive", "phi0", default=0.0)
        if kind == "constant":
            return DriveSpec.constant(omega0, theta0, phi0)
        nu = rd.number("drive", "nu", required=True)
        if kind == "conical":
            return DriveSpec.conical(omega0, theta0, nu, phi0)
        epsilon = rd.number("drive", "epsilon", required=True)
        nu_m = rd.number("drive", "nu_m", required=True)
        return DriveSpec.modulated(omega0, theta0, nu, epsilon, nu_m, phi0)
    except ConfigError:
        raise
    except SpinPhaseError as exc:
        raise rd.error("drive", None, str(exc)) from exc


def _parse_initial(rd: _Reader):
    mode = rd.raw("initial", "invariant", required=False) or "paper_mode"
    if mode not in INITIALIZERS:
        raise rd.error("initial", "invariant", f"must be one of {', '.join(INITIALIZERS)}")
    lam0 = rd.number("initial", "lambda0", required=mode == "angles")
    gamma0 = rd.number("initial", "gamma0", required=mode == "angles")

    has_up, has_down = rd.has("initial", "c_up"), rd.has("initial", "c_down")
    if has_up != has_down:
        raise rd.error("initial", "c_down" if has_up else "c_up", "both amplitudes must be given")
    psi0 = None
    if has_up:
        c_up = rd.typed("initial", "c_up", _complex_pair, required=True)
        c_down = rd.typed("initial", "c_down", _complex_pair, required=True)
        psi0 = spinor(c_up, c_down)
        norm = float(np.linalg.norm(psi0))
        if norm == 0.0:
            raise rd.error("initial", "c_up", "initial spinor is the zero vector")
        psi0 = psi0 / norm
    return mode, lam0, gamma0, psi0


def _parse_time(rd: _Reader, drive) -> Tuple[float, int]:
    if rd.has("time", "t_end"):
        t_end = rd.number("time", "t_end", required=True, check=lambda v: v > 0,
                          requirement="must be positive")
    else:
        periods = rd.number("time", "periods", required=True, check=lambda v: v > 0,
                            requirement="must be positive")
        try:
            t_end = periods * drive.period()
        except SpinPhaseError as exc:
            raise rd.error("time", "periods", str(exc)) from exc
    if drive.t_span is not None:
        t0, t1 = drive.t_span
        if t_end > (t1 - t0) * (1.0 + TOL.time_match):
            key = "t_end" if rd.has("time", "t_end") else "periods"
            raise rd.error("time", key, f"run length {t_end:.6g} exceeds the drive table span [{t0:.6g}, {t1:.6g}]")
    nodes = rd.integer("time", "nodes", required=True, check=lambda v: v >= 5,
                       requirement="must be at least 5")
    return t_end, nodes


def _parse_field(rd: _Reader) -> FieldSettings:
    preset = rd.raw("field", "preset", required=False)
    if preset not in (None, "earth"):
        raise rd.error("field", "preset", f"unknown preset {preset!r}")
    if preset == "earth":
        base_kerr, base_frame = KerrParams.earth(), RotFrame.earth()
    else:
        base_kerr = KerrParams(G=G_NEWTON, M=0.0, c=C_LIGHT, a=0.0)
        base_frame = RotFrame(omega=0.0)
    try:
        kerr = KerrParams(
            G=rd.number("field", "G", default=base_kerr.G),
            M=rd.number("field", "M", default=base_kerr.M),
            c=rd.number("field", "c", default=base_kerr.c),
            a=rd.number("field", "a", default=base_kerr.a),
        )
        frame = RotFrame(omega=rd.number("field", "omega", default=base_frame.omega),
                         v=rd.number("field", "v", default=base_frame.v))
    except ConfigError:
        raise
    except SpinPhaseError as exc:
        raise rd.error("field", None, str(exc)) from exc
    return FieldSettings(
        kerr=kerr,
        frame=frame,
        mass=rd.number("field", "mass", default=NEUTRON_MASS, check=lambda v: v >= 0,
                       requirement="must be non-negative"),
        rel_step=rd.number("field", "rel_step", default=TOL.curl_rel_step, check=lambda v: 0 < v < 0.1,
                           requirement="must lie in (0, 0.1)"),
    )


def _parse_grid(rd: _Reader, rel_step: float = TOL.curl_rel_step) -> GridSpec:
    positive = dict(check=lambda v: v > 0, requirement="must be positive")
    grid = GridSpec(
        r_min=rd.number("grid", "r_min", required=True, **positive),
        r_max=rd.number("grid", "r_max", required=True, **positive),
        n_r=rd.integer("grid", "n_r", required=True, **positive),
        theta_min=rd.number("grid", "theta_min", required=True),
        theta_max=rd.number("grid", "theta_max", required=True),
        n_theta=rd.integer("grid", "n_theta", required=True, **positive),
        phi_min=rd.number("grid", "phi_min", default=0.0),
        phi_max=rd.number("grid", "phi_max", default=0.0),
        n_phi=rd.integer("grid", "n_phi", default=1, **positive),
        r_spacing=rd.raw("grid", "r_spacing", required=False) or "log",
    )
    if grid.r_spacing not in ("log", "linear"):
        raise rd.error("grid", "r_spacing", "must be 'log' or 'linear'")
    if grid.r_max < grid.r_min:
        raise rd.error("grid", "r_max", "must not be below r_min")
    if not 0 < grid.theta_min <= grid.theta_max < math.pi:
        raise rd.error("grid", "theta_min", "polar range must lie strictly inside (0, pi)")
    # curl stencils reach 2 rel_step in theta on either side
    margin = 2.0 * rel_step
    if grid.theta_min <= margin:
        raise rd.error("grid", "theta_min", f"must exceed 2 rel_step = {margin:.3g} to keep stencils off the pole")
    if grid.theta_max >= math.pi - margin:
        raise rd.error("grid", "theta_max", f"must stay below pi - 2 rel_step = {math.pi - margin:.6g}")
    return grid


def _parse_sweep(rd: _Reader) -> SweepSettings:
    parameter = rd.raw("sweep", "parameter")
    if parameter not in ("omega0", "theta0", "phi0", "nu", "epsilon", "nu_m"):
        raise rd.error("sweep", "parameter", f"cannot sweep {parameter!r}")
    values = rd.floats("sweep", "values")
    if not values:
        raise rd.error("sweep", "values", "list is empty")
    study = rd.raw("sweep", "study", required=False) or "plain"
    if study not in STUDIES:
        raise rd.error("sweep", "study", f"must be one of {', '.join(STUDIES)}")
    if study == "berry" and parameter != "nu":
        raise rd.error("sweep", "parameter", "berry study sweeps 'nu'")
    if study == "response" and parameter != "epsilon":
        raise rd.error("sweep", "parameter", "response study sweeps 'epsilon'")
    return SweepSettings(
        parameter=parameter,
        values=tuple(values),
        study=study,
        nodes_per_period=rd.integer("sweep", "nodes_per_period", default=32,
                                    check=lambda v: v >= 4, requirement="must be at least 4"),
        n_jobs=rd.integer("sweep", "n_jobs", default=N_JOBS),
    )


def load_scenario(path) -> ScenarioConfig:
    """Parse the scenario at ``path``; every problem surfaces as ConfigError."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist", path=str(path))
    rd = _Reader(path)
    base = path.parent.resolve()

    name = rd.raw("scenario", "name", required=False) or path.stem
    out_text = rd.raw("scenario", "output_dir", required=False)
    output_dir = Path(out_text) if out_text else OUTPUT_DIR
    if out_text and not output_dir.is_absolute():
        output_dir = base / output_dir

    drive = _parse_drive(rd, base) if rd.has("drive") else None
    mode, lam0, gamma0, psi0 = _parse_initial(rd) if rd.has("initial") else ("paper_mode", None, None, None)
    t_end, nodes = _parse_time(rd, drive) if rd.has("time") and drive is not None else (None, None)
    field_settings = _parse_field(rd) if rd.has("field") else None
    grid = None
    if rd.has("grid"):
        grid = _parse_grid(rd, field_settings.rel_step if field_settings else TOL.curl_rel_step)

    cfg = ScenarioConfig(
        name=name,
        path=path,
        output_dir=output_dir,
        drive=drive,
        initializer=mode,
        lam0=lam0,
        gamma0=gamma0,
        psi0=psi0,
        t_end=t_end,
        nodes=nodes,
        rtol=rd.number("tolerances", "rtol", default=TOL.rtol, check=lambda v: v > 0,
                       requirement="must be positive"),
        atol=rd.number("tolerances", "atol", default=TOL.atol, check=lambda v: v > 0,
                       requirement="must be positive"),
        substeps=rd.integer("tolerances", "substeps", default=DEFAULT_SUBSTEPS, check=lambda v: v >= 1,
                            requirement="must be at least 1"),
        fidelity_threshold=rd.number("tolerances", "fidelity_threshold", default=FIDELITY_THRESHOLD,
                                     check=lambda v: 0 <= v <= 1, requirement="must lie in [0, 1]"),
        field_settings=field_settings,
        grid=grid,
        sweep=_parse_sweep(rd) if rd.has("sweep") else None,
    )
    logger.info(f"Loaded scenario '{cfg.name}' from {path}")
    return cfg

