"""
Command-line entry point

Exit codes: 0 success, 1 usage or configuration error (and malformed CSV for
emit-plot), 2 validation failure, 3 numerical failure.
"""

import argparse
import logging
import sys
from typing import List, Optional

from app.commands.plot import run_plot_command
from app.commands.sweep import run_point_command, run_sweep_command
from app.commands.validate import run_validate_command
from utils.config_loader import load_config
from utils.errors import CKAError, ConfigError, NumericalToleranceError, ParameterError, ValidationFailure

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

LOG_FORMAT = "%(asctime)s [%(levelname)s] [%(name)s] %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="passive-cka",
        description="Key rates of fully passive conference key agreement over a beam-splitter network",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Key rate against channel loss, written as CSV")
    sweep.add_argument("--config", required=True, help="Configuration file")
    sweep.add_argument("--output", help="CSV path (default: OUTPUT_PATH of the config)")

    point = sub.add_parser("point", help="Full report of one loss value as JSON")
    point.add_argument("--config", required=True, help="Configuration file")
    point.add_argument("--loss-db", type=float, required=True, help="Per-user channel loss")

    validate = sub.add_parser("validate", help="Run the oracle checks")
    validate.add_argument("--config", required=True, help="Configuration file")

    plot = sub.add_parser("emit-plot", help="Write a standalone plotting script for a sweep CSV")
    plot.add_argument("csv", help="CSV produced by sweep")
    plot.add_argument("--script", help="Script path (default: <csv stem>_plot.py)")
    plot.add_argument("--html", action="store_true", help="Also write the figure as HTML")
    return parser


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "emit-plot":
        script, html_path = run_plot_command(args.csv, args.script, html=args.html)
        print(script)
        if html_path:
            print(html_path)
        return EXIT_OK

    config = load_config(args.config)
    if args.command == "sweep":
        print(run_sweep_command(config, args.output))
    elif args.command == "point":
        if args.loss_db < 0:
            raise ParameterError("--loss-db must be >= 0")
        print(run_point_command(config, args.loss_db))
    elif args.command == "validate":
        run_validate_command(config)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the command and map errors to exit codes"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)

    try:
        return _dispatch(args)
    except ConfigError as e:
        logger.error("%s", e)
        print(e.describe(), file=sys.stderr)
        return EXIT_CONFIG
    except ValidationFailure as e:
        logger.error("%s", e)
        return EXIT_VALIDATION
    except NumericalToleranceError as e:
        logger.error("numerical failure: %s (estimate %s, error %s)", e, e.estimate, e.error_estimate)
        return EXIT_NUMERICAL
    except ParameterError as e:
        logger.error("%s", e)
        return EXIT_CONFIG
    except CKAError as e:
        logger.error("%s", e)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
