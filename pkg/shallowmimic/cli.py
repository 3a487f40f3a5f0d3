"""
Command-line interface for shallowmimic.

This module provides the ``shallowmimic`` entry point. Every subcommand
reads an optional INI configuration; any ``--key value`` pair not listed
below overrides the configuration key of the same name.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from shallowmimic import __version__
from shallowmimic.exceptions import (
    ConfigurationError,
    ContractError,
    DataError,
    NumericError,
    ShallowMimicError,
    ShapeError,
)
from shallowmimic.harness.config import ExperimentConfig, load_config
from shallowmimic.harness.experiments import (
    COMMANDS,
    AbsorbReport,
    EvalReport,
    RunSummary,
)
from shallowmimic.harness.results import SweepResult, write_json
from shallowmimic.harness.workspace import Workspace
from shallowmimic.utils.constants import ExitCodes, LoggingConfig

# Configure logging
logging.basicConfig(
    level=getattr(logging, LoggingConfig.DEFAULT_LEVEL),
    format=LoggingConfig.FORMAT,
    datefmt=LoggingConfig.DATE_FORMAT,
)
logger = logging.getLogger(__name__)

# commands that only read existing files
READ_ONLY_COMMANDS = {"eval", "absorb"}


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """
    Parse command-line arguments.

    Unrecognized ``--key value`` tokens are kept on ``args.overrides``.

    Returns:
        Parsed arguments namespace.
    """
    parser = argparse.ArgumentParser(
        prog="shallowmimic",
        allow_abbrev=False,
        description="Train deep teachers and distill them into shallow mimic networks.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s train-teacher --config exp.ini --seeds 0,1,2,3 --bootstrap true
  %(prog)s distill --config exp.ini --teacher-models runs/models/teacher_s0.smim
  %(prog)s sweep-params --config exp.ini --widths 16,64,256
  %(prog)s eval --model runs/models/mimic_h64_s0.smim --dataset test.csv
  %(prog)s absorb --model runs/models/mimic_h64_s0.smim
        """,
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="Experiment to run")
    parser.add_argument("--config", "-c", type=Path, help="INI configuration file")
    parser.add_argument("--out", "-o", type=str, help="Output directory (overrides out_dir)")
    parser.add_argument("--seeds", type=str, help="Comma-separated run seeds (overrides seeds)")
    parser.add_argument(
        "--no-check-paths",
        action="store_true",
        help="Do not verify that referenced input files exist before running",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    # Common options
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="Enable verbose logging"
    )
    parser.add_argument(
        "-q", "--quiet", action="store_true", help="Suppress non-error output"
    )

    args, extra = parser.parse_known_args(argv)
    args.overrides = extra
    return args


def parse_overrides(tokens: Sequence[str]) -> Dict[str, str]:
    """
    Turn ``--key value`` and ``--key=value`` tokens into a mapping.

    Raises:
        ConfigurationError: On a token that is not an option or an option
            without a value.
    """
    overrides: Dict[str, str] = {}
    index = 0
    while index < len(tokens):
        token = tokens[index]
        if not token.startswith("--") or len(token) == 2:
            raise ConfigurationError(f"Unexpected argument '{token}'")
        if "=" in token:
            key, value = token.split("=", 1)
            index += 1
        else:
            if index + 1 >= len(tokens) or tokens[index + 1].startswith("--"):
                raise ConfigurationError(f"Option '{token}' needs a value")
            key, value = token, tokens[index + 1]
            index += 2
        overrides[key] = value
    return overrides


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Load the configuration file and apply command-line overrides."""
    overrides = parse_overrides(args.overrides)
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.seeds is not None:
        overrides["seeds"] = args.seeds
    return load_config(args.config, overrides, check_paths=not args.no_check_paths)


def report(command: str, result: object, quiet: bool) -> None:
    """Print the user-facing summary of a finished command."""
    if isinstance(result, EvalReport):
        # machine-readable; printed even with --quiet
        print(f"error_rate,{result.error_rate:.4f}")
        if result.confusion_path is not None and not quiet:
            print(f"Confusion matrix: {result.confusion_path}")
        return
    if quiet:
        return
    if isinstance(result, AbsorbReport):
        print(f"Parameters: {result.before:,} -> {result.after:,}")
        print(f"Saved: {result.output}")
    elif isinstance(result, SweepResult):
        print(f"{command}: {len(result.rows)} models trained")
    elif isinstance(result, RunSummary):
        for path, error in zip(result.models, result.dev_errors):
            print(f"{path}: dev_error={error:.4f}")
        if result.ensemble_dev_error is not None:
            print(f"Ensemble dev_error={result.ensemble_dev_error:.4f}")


def run(args: argparse.Namespace) -> object:
    """Execute the selected command and return its result object."""
    config = build_config(args)
    command = COMMANDS[args.command]
    logger.info(f"Running {args.command} (config: {config.source or '<defaults>'})")
    if args.command in READ_ONLY_COMMANDS:
        return command(config)
    workspace = Workspace.create(Path(config.out_dir))
    write_json(workspace.table_path(f"{args.command}_config", ".json"), config.to_dict())
    return command(config, workspace)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point for CLI.

    Returns:
        Exit code: 0 on success, 2 for configuration or contract errors,
        3 for unreadable data, 4 for numeric failures.
    """
    args = parse_arguments(argv)

    # Adjust logging level based on arguments
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        logger.debug("Verbose logging enabled")
    elif args.quiet:
        logging.getLogger().setLevel(logging.ERROR)

    try:
        result = run(args)
        report(args.command, result, args.quiet)
        return ExitCodes.SUCCESS
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return ExitCodes.CONFIG_ERROR
    except (ShapeError, ContractError) as e:
        logger.error(f"Invalid input: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return ExitCodes.CONFIG_ERROR
    except DataError as e:
        logger.error(f"Data error: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return ExitCodes.DATA_ERROR
    except NumericError as e:
        logger.error(f"Numeric error: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return ExitCodes.NUMERIC_ERROR
    except ShallowMimicError as e:
        logger.error(f"shallowmimic error: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return ExitCodes.UNEXPECTED_ERROR
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        print(f"Unexpected error: {e}", file=sys.stderr)
        return ExitCodes.UNEXPECTED_ERROR


if __name__ == "__main__":
    sys.exit(main())
