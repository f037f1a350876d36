"""
Command-line entry point for plvc
"""
import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from .cli.commands import COMMANDS
from .cli.io import load_config, write_error
from .models.config import RunConfig
from .utils.errors import ConfigError, PLVCError
from .utils.logger import setup_logger

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PLVC_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plvc",
        description="Series estimation, selection and testing of partially linear varying coefficient models",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("--config", help="RunConfig JSON file")
        sub.add_argument("--data", help="Input CSV (overrides config)")
        sub.add_argument("--out", help="Output directory (overrides config)")
        sub.add_argument("--seed", type=int, help="Master seed (overrides config)")
        sub.add_argument("--threads", type=int, help="Worker count (overrides config)")
        sub.add_argument("--strict", action="store_true", default=None, help="Raise on index values outside the basis support")
    return parser


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    """CLI flags take precedence over the config file"""
    updates = {
        key: value
        for key, value in (
            ("data", args.data),
            ("out", args.out),
            ("seed", args.seed),
            ("threads", args.threads),
            ("strict", args.strict),
        )
        if value is not None
    }
    if not updates:
        return config
    try:
        return RunConfig.model_validate({**config.model_dump(mode="json"), **updates})
    except ValueError as e:
        raise ConfigError(f"Invalid command-line override: {e}", details={"overrides": sorted(updates)}) from e


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand

    Returns:
        0 when every output was written, 2 for plvc errors, 1 otherwise
    """
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out) if args.out else None
    try:
        config = apply_overrides(load_config(args.config), args)
        out_dir = Path(config.out)
        written = COMMANDS[args.command](config)
        for path in written:
            print(path)
        return EXIT_OK
    except PLVCError as e:
        logger.error(f"{args.command} failed: {e.message}")
        print(json.dumps(write_error(e, out_dir), default=str), file=sys.stderr)
        return EXIT_PLVC_ERROR
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly")
        print(json.dumps(write_error(e, out_dir), default=str), file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
