#!/usr/bin/env python3
"""
spinphase/cli/main.py
-----------------------
Batch front end:

    spinphase field  <config> [--out DIR] [--tol X] [--quiet]
    spinphase evolve <config> [--out DIR] [--tol X] [--quiet]
    spinphase sweep  <config> [--out DIR] [--tol X] [--quiet]

Exit codes: 0 success, 1 numerical failure, 2 configuration error,
3 validation failure (fidelity below threshold).
"""

import argparse
import logging
import sys
from typing import List, Optional

from spinphase.core.config import LOG_LEVEL
from spinphase.core.errors import EXIT_CONFIG, EXIT_NUMERICAL, SpinPhaseError
from spinphase.core.scenario import load_scenario
from spinphase.services.service import SpinPhaseService

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinphase",
        description="Gravitomagnetic fields and invariant-based spin-rotation phases.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("field", "evaluate the gravitomagnetic field and force on a grid"),
            ("evolve", "solve one spin scenario and cross-check it by direct integration"),
            ("sweep", "run a scenario over a list of parameter values")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", help="scenario INI file")
        cmd.add_argument("--out", default=None, help="output directory (overrides the config)")
        cmd.add_argument("--tol", type=float, default=None,
                         help="relative tolerance of the auxiliary integrator")
        cmd.add_argument("--quiet", action="store_true", help="warnings and errors only, no progress bar")
    return parser


def configure_logging(quiet: bool):
    level = logging.WARNING if quiet else getattr(logging, LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(message)s", force=True)


def _execute(command: str, config, service: SpinPhaseService) -> int:
    try:
        cfg = load_scenario(config)
        outcome = getattr(service, f"run_{command}")(cfg)
    except SpinPhaseError as exc:
        logger.error(f"{command} failed: {exc}")
        return exc.exit_code
    except (ArithmeticError, FloatingPointError, RuntimeError) as exc:
        logger.error(f"{command} failed with a numerical error: {exc}")
        return EXIT_NUMERICAL

    for path in outcome.paths:
        logger.info(f"Artifact: {path}")
    return outcome.exit_code


def cmd_field(config, service: Optional[SpinPhaseService] = None) -> int:
    """Field grid CSV plus summary; 0 on success."""
    return _execute("field", config, service or SpinPhaseService())


def cmd_evolve(config, service: Optional[SpinPhaseService] = None) -> int:
    """Trajectory, direct and summary artifacts; 3 when the fidelity check fails."""
    return _execute("evolve", config, service or SpinPhaseService())


def cmd_sweep(config, service: Optional[SpinPhaseService] = None) -> int:
    """Every member runs before the aggregate exit code is decided."""
    return _execute("sweep", config, service or SpinPhaseService())


COMMANDS = {"field": cmd_field, "evolve": cmd_evolve, "sweep": cmd_sweep}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.quiet)

    if args.tol is not None and not args.tol > 0:
        logger.error(f"--tol must be positive (got {args.tol})")
        return EXIT_CONFIG

    service = SpinPhaseService(output_dir=args.out, tol=args.tol, progress=not args.quiet)
    return COMMANDS[args.command](args.config, service)


def run():
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()
