"""
Command-line interface for the cocycle laboratory.

This module provides the `cocycle-lab` entry point: one subcommand per
laboratory operation, each reading a JSON configuration and writing CSV/JSON
results plus a `run.json` manifest into the output directory.

Exit codes: 0 on success, 2 on configuration errors (including windows a
table does not cover), 3 when a matrix-step budget is exhausted. Numerical
faults inside a command are recorded as soft failures in `run.json`.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from src.utils.configuration import Configuration
from src.utils.exceptions import BudgetExceededError, ConfigurationError, IllegalWindowError
from src.workflow import CocycleLabWorkflow

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def setup_logging(log_file: Optional[str] = None, verbose: bool = False) -> None:
    """Set up logging configuration."""
    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    handlers = [logging.StreamHandler(sys.stdout)]
    if log_file:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=log_format,
        handlers=handlers,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the shared options on every subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="JSON configuration file", default=None)
    common.add_argument("--out", "-o", help="Output directory (default: 'results')", default="results")
    common.add_argument("--threads", "-j", type=int, help="Maximum worker processes", default=None)
    common.add_argument("--seed", type=int, help="Run seed (overrides general.seed)", default=None)
    common.add_argument("--budget", type=int, help="Matrix steps per enumeration (overrides general.budget)",
                        default=None)
    common.add_argument("--plot", action="store_true", help="Write PNG figures next to the CSV files")
    common.add_argument("--log-file", "-lf", help="Path to log file", default=None)
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging and progress bars")

    parser = argparse.ArgumentParser(prog="cocycle-lab",
                                     description="Finite-scale experiments on SL(2,R) cocycles over subshifts.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    subshift = subparsers.add_parser("subshift", parents=[common], help="Prefixes, factors, frequencies")
    subshift.add_argument("--prefix", type=int, help="Emit the length-N prefix", default=None)
    subshift.add_argument("--factors", type=int, help="Emit all length-N factors and p(1..N)", default=None)
    subshift.add_argument("--frequencies", type=int, help="Emit length-N cylinder frequencies", default=None)
    subshift.add_argument("--boshernitzan", type=int, help="Emit eta(n) for n = 1..N", default=None)
    subshift.add_argument("--sample-length", type=int, help="Window starts counted for frequencies",
                          default=None)

    subparsers.add_parser("exponent", parents=[common], help="Exponent traces and Var_n/n")
    subparsers.add_parser("uh", parents=[common], help="Cone-field certificate and splitting")
    subparsers.add_parser("avalanche", parents=[common], help="Avalanche Principle certificate")

    spectrum = subparsers.add_parser("spectrum", parents=[common],
                                     help="Spectrum scan, approximants and semicontinuity")
    spectrum.add_argument("--approximants", type=int, help="Band sets of approximant levels 1..K", default=None)

    subparsers.add_parser("approximate", parents=[common], help="Locally constant family approximation")
    subparsers.add_parser("construct", parents=[common], help="Iterative uniform potential construction")
    return parser


def _options(args):
    ignored = {"command", "config", "out", "threads", "seed", "budget", "plot", "log_file", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in ignored and v is not None}


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, run one command and map errors to exit codes.

    Args:
        argv (list of str, optional): Arguments. Defaults to sys.argv[1:].

    Returns:
        int: Exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(args.log_file, args.verbose)
    logger = logging.getLogger("cocycle_lab")

    try:
        config = Configuration(args.config)
        if args.seed is not None:
            config.set_config_value('general.seed', args.seed)
        if args.budget is not None:
            if args.budget <= 0:
                raise ConfigurationError(f"--budget must be positive, got {args.budget}")
            config.set_config_value('general.budget', args.budget)
        if args.threads is not None:
            config.set_config_value('general.threads', args.threads)
        if args.verbose:
            config.set_config_value('general.verbose', True)

        workflow = CocycleLabWorkflow(config, output_dir=args.out, threads=args.threads, plot=args.plot,
                                      verbose=args.verbose, options=_options(args))
        manifest = workflow.run(args.command)
    except BudgetExceededError as e:
        logger.error(f"Budget exhausted: {e}")
        return EXIT_BUDGET
    except (ValueError, IllegalWindowError) as e:
        # ConfigurationError, invalid parameter values and tables missing a legal window
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    if manifest["soft_failures"]:
        logger.warning(f"{len(manifest['soft_failures'])} soft failures recorded in run.json")
    logger.info(f"Outputs written to {args.out}: {', '.join(manifest['outputs'])}")
    return EXIT_OK


def main():
    """Run the laboratory CLI."""
    sys.exit(run())


if __name__ == "__main__":
    main()
