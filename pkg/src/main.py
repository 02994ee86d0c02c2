import argparse
import json
import logging
import os
import sqlite3
import sys
from typing import List, Optional

from . import __version__
from .commands import (
    EXIT_INTERNAL,
    EXIT_INVALID,
    EXIT_OK,
    cmd_analyze,
    cmd_simulate,
    cmd_validate,
    exit_code,
)
from .errors import ScenarioError, ValidationError
from .history import RunHistory
from .report import render_report
from .sim.base import MAX_SEED


logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False, log_file: Optional[str] = None):
    """Configure logging; diagnostics go to stderr, reports to stdout."""
    level = os.environ.get("MPLS_SIM_LOG_LEVEL", "INFO").upper()
    if verbose:
        level = "DEBUG"
    if level not in logging.getLevelNamesMapping():
        level = "INFO"

    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )


class CliParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the validation code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}")
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError(f"seed {value} outside unsigned 64-bit range")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"{value} must be >= 1")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}")
    if not value > 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"{text} must be a finite positive number")
    return value


def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="debug logging")
    common.add_argument("--log-file", help="also write logs to this file")

    parser = CliParser(
        prog="mpls-sim",
        description="MPLS security simulator and analytic risk engine",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    validate = subparsers.add_parser("validate", parents=[common], help="load and validate a scenario")
    validate.add_argument("file")

    analyze = subparsers.add_parser("analyze", parents=[common], help="evaluate the analytic models")
    analyze.add_argument("file")
    analyze.add_argument("--format", choices=("text", "json"), default="text")
    analyze.add_argument("--history", metavar="DB", help="append the report to a run ledger")

    simulate = subparsers.add_parser("simulate", parents=[common], help="run the Monte Carlo experiment")
    simulate.add_argument("file")
    simulate.add_argument("--seed", type=_seed)
    simulate.add_argument("--trials", type=_positive_int)
    simulate.add_argument("--horizon", type=_positive_float)
    simulate.add_argument("--workers", type=_positive_int, default=1)
    simulate.add_argument("--format", choices=("text", "json"), default="text")
    simulate.add_argument("--history", metavar="DB", help="append the report to a run ledger")

    history = subparsers.add_parser("history", parents=[common], help="list recorded runs")
    history.add_argument("db")
    history.add_argument("--digest", help="only runs of this scenario digest")
    history.add_argument("--limit", type=_positive_int)

    return parser


def _report_scenario_error(e: ScenarioError):
    logger.error(f"Scenario error: {e}")
    if isinstance(e, ValidationError):
        for violation in e.violations:
            print(f"violation: {violation}", file=sys.stderr)
    else:
        print(f"error: {e}", file=sys.stderr)


def _run_history(args) -> int:
    try:
        ledger = RunHistory(args.db)
        runs = ledger.runs(digest=args.digest, limit=args.limit)
        statistics = ledger.get_statistics()
    except (sqlite3.Error, OSError) as e:
        logger.error(f"Run history {args.db} unavailable: {e}")
        return EXIT_INTERNAL
    print(json.dumps({"runs": runs, "statistics": statistics}, sort_keys=True, indent=2))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI."""
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.log_file)

    if args.command == "history":
        return _run_history(args)

    try:
        if args.command == "validate":
            scenario = cmd_validate(args.file)
            print(f"OK {args.file} digest {scenario.digest}")
            return EXIT_OK

        scenario = cmd_validate(args.file)
        if args.command == "analyze":
            doc = cmd_analyze(scenario, format=args.format)
        else:
            doc = cmd_simulate(
                scenario,
                seed=args.seed,
                trials=args.trials,
                horizon=args.horizon,
                workers=args.workers,
                format=args.format,
            )
    except ScenarioError as e:
        _report_scenario_error(e)
        return EXIT_INVALID
    except Exception as e:
        logger.error(f"Internal failure: {e}", exc_info=True)
        return EXIT_INTERNAL

    sys.stdout.write(render_report(doc, args.format))
    if args.history:
        try:
            RunHistory(args.history).record(doc)
        except (sqlite3.Error, OSError) as e:
            logger.error(f"Could not record run in {args.history}: {e}")
            return EXIT_INTERNAL
    return exit_code(doc)


if __name__ == "__main__":
    sys.exit(main())
