"""
Main entry point for the Jahn-Teller chain toolkit.

Subcommands:
    sweep <config>                         run every sweep of a TOML file
    figure <fig1|fig2|fig3|fig4|all>       regenerate published figure data
    validate <config>                      compare against exact diagonalization
    critical                               bisect the critical coupling
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from src.config import Config, get_config, set_config
from src.model.errors import CutoffNotConverged, ModelError
from src.model.lattice import Boundary, ModelParams
from src.sweeps.critical import critical_scan
from src.sweeps.figures import reproduce_figure
from src.sweeps.runner import run_sweep
from src.sweeps.settings import ConfigError, FigureId, FigureSpec, load_sweeps, load_validation, parse_overrides
from src.sweeps.validation import validate
from src.utils.formatting import format_critical_report, format_sweep_summary

logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MODEL = 3
EXIT_VALIDATION = 4
EXIT_IO = 5


# ===== Subcommands =====

def cmd_sweep(args: argparse.Namespace) -> int:
    sweeps = load_sweeps(args.config)
    for cfg in sweeps:
        result = run_sweep(cfg)
        print(format_sweep_summary(cfg.name, len(result.points), result.n_diverged, [str(p) for p in result.files]))
    return EXIT_OK


def cmd_figure(args: argparse.Namespace) -> int:
    overrides = parse_overrides(args.set or [])
    figures = list(FigureId) if args.figure == "all" else [FigureId(args.figure)]
    out = args.out or get_config().output_dir
    for figure_id in figures:
        target = Path(out) / figure_id.value if args.figure == "all" else Path(out)
        results = reproduce_figure(FigureSpec(figure_id=figure_id, overrides=overrides), target)
        for result in results:
            print(format_sweep_summary(
                result.config.name,
                len(result.points),
                result.n_diverged,
                [str(p) for p in result.files],
            ))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    spec = load_validation(args.config)
    try:
        outcome = validate(spec, args.out)
    except CutoffNotConverged as e:
        print(f"Fock cutoff did not converge: {e}", file=sys.stderr)
        for n_max, energy in e.table.rows:
            print(f"  n_max={n_max:3d}  E0={energy:.12f}", file=sys.stderr)
        return EXIT_MODEL
    print(outcome.text)
    return EXIT_OK if outcome.passed else EXIT_VALIDATION


def _parse_range(text: str) -> tuple[float, float]:
    try:
        low, high = (float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"--range expects two comma-separated numbers, got {text!r}") from None
    return low, high


def cmd_critical(args: argparse.Namespace) -> int:
    params = ModelParams(
        n_sites=args.sites, omega0=args.omega0, t=args.t, omega=args.omega, boundary=Boundary.PERIODIC
    )
    estimate = critical_scan(params, _parse_range(args.range))
    print(format_critical_report(estimate.g_c, estimate.closed_form, args.omega, args.omega0))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jt-chain",
        description="Mean-field and spin-wave analysis of the cooperative Jahn-Teller chain",
    )
    parser.add_argument("--env-file", type=Path, help="Path to .env file")
    parser.add_argument("--log-level", help="Override JT_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Run every [sweep.NAME] table of a TOML config")
    sweep.add_argument("config", type=Path)
    sweep.set_defaults(handler=cmd_sweep)

    figure = sub.add_parser("figure", help="Regenerate figure data and a plot script")
    figure.add_argument("figure", choices=[f.value for f in FigureId] + ["all"])
    figure.add_argument("--out", type=Path, help="Output directory (default JT_OUTPUT_DIR)")
    figure.add_argument("--set", action="append", metavar="KEY=VALUE", help="Override a model parameter")
    figure.set_defaults(handler=cmd_figure)

    check = sub.add_parser("validate", help="Compare against exact diagonalization")
    check.add_argument("config", type=Path)
    check.add_argument("--out", type=Path, help="Output directory (default from the config)")
    check.set_defaults(handler=cmd_validate)

    critical = sub.add_parser("critical", help="Bisect the critical coupling")
    critical.add_argument("--omega", type=float, default=1.0, help="Transverse field")
    critical.add_argument("--omega0", type=float, default=1.0, help="Lowest mode energy")
    critical.add_argument("--sites", type=int, default=20, help="Chain length N")
    critical.add_argument("--t", type=float, default=0.4, help="Hopping amplitude")
    critical.add_argument("--range", default="0.1,0.9", help="Coupling bracket low,high")
    critical.set_defaults(handler=cmd_critical)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    # Load config
    try:
        config = Config.from_env(args.env_file) if args.env_file else Config.from_env()
    except ValueError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.log_level:
        config.log_level = args.log_level.upper()
    set_config(config)

    logging.basicConfig(
        level=getattr(logging, config.log_level, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except ModelError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_MODEL
    except OSError as e:
        path = getattr(e, "filename", None)
        logger.error(f"I/O error{f' on {path}' if path else ''}: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
