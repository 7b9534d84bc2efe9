"""Command-line entry point: `unida <subcommand> --config path [--seed N] [--out dir]`."""

__all__ = ["main", "build_parser", "load_run_context", "error_details"]

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from typing import Any

import pydantic
import yaml

from unida._version import __version__
from unida.cli.commands import COMMANDS, RunContext, run_command
from unida.common.errors import ConfigError, UnidaError
from unida.project.config import ExperimentConfig
from unida.project.utils import NUM_THREADS_ENV_VAR, resolve_num_threads

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_CONFIG_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        help="experiment file (JSON or YAML); defaults to the single experiment.json|yaml|yml "
        "below the working directory",
    )
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--out", help="override the output directory")
    common.add_argument(
        "--threads", type=int, help=f"worker threads (default: ${NUM_THREADS_ENV_VAR}, else 1)"
    )
    common.add_argument("--log-level", default="INFO", choices=LOG_LEVELS)

    parser = argparse.ArgumentParser(
        prog="unida", description="Unified data assimilation experiments."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="<subcommand>")
    for name, command in COMMANDS.items():
        summary = (command.__doc__ or "").strip().splitlines()[0]
        subparsers.add_parser(name, parents=[common], help=summary, description=summary)
    return parser


def load_run_context(args: argparse.Namespace) -> RunContext:
    """Load the experiment config and apply command-line overrides."""
    try:
        config = ExperimentConfig.load_config(args.config)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {e.filename}", "config") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Config file {args.config} is not valid YAML: {e}", "config") from e
    updates: dict[str, Any] = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["output_dir"] = args.out
    if updates:
        config = ExperimentConfig.model_validate({**config.model_dump(), **updates})
    return RunContext(config=config, threads=resolve_num_threads(args.threads))


def error_details(error: Exception) -> dict[str, Any]:
    """Machine-readable description of a failed run."""
    if isinstance(error, pydantic.ValidationError):
        first = error.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        return {
            "error": "ConfigError",
            "message": f"{key}: {first['msg']}" if key else first["msg"],
            "key": key or None,
            "error_count": error.error_count(),
        }
    if isinstance(error, UnidaError):
        return error.details()
    return {"error": error.__class__.__name__, "message": str(error)}


def _report(error: Exception, args: argparse.Namespace) -> None:
    details = error_details(error)
    if args.config:
        details["config"] = args.config
    sys.stderr.write(json.dumps(details, sort_keys=True, default=str) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, force=True)
    try:
        run_command(args.command, load_run_context(args))
    except (ConfigError, pydantic.ValidationError) as e:
        _report(e, args)
        return EXIT_CONFIG_ERROR
    except UnidaError as e:
        logger.debug("Run failed", exc_info=True)
        _report(e, args)
        return EXIT_RUNTIME_ERROR
    except Exception as e:
        logger.debug("Run failed unexpectedly", exc_info=True)
        _report(e, args)
        return EXIT_RUNTIME_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
