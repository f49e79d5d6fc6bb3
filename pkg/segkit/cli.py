"""``segkit`` command-line entry point."""
import argparse
import logging
import sys
from typing import Optional, Sequence

import torch
from pydantic import ValidationError

from segkit import __version__
from segkit.commands import COMMANDS
from segkit.config import configure_logging
from segkit.errors import InputValidationError, SegkitError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_VALIDATION_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segkit",
        description="Phoneme boundary detection: data preparation, SuperSeg training and evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"segkit {__version__}")
    parser.add_argument("--log-level", help="logging level (default SEGKIT_LOG_LEVEL or INFO)")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def _fail(args: argparse.Namespace, exc: BaseException, code: int) -> int:
    breadcrumb = getattr(args, "breadcrumb", None)
    suffix = f" (run directory: {breadcrumb})" if breadcrumb else ""
    print(f"segkit {args.command}: error: {exc}{suffix}", file=sys.stderr)
    logger.debug("command failed", exc_info=exc)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    torch.use_deterministic_algorithms(True, warn_only=True)
    try:
        args.handler(args)
    except (InputValidationError, ValidationError) as exc:
        return _fail(args, exc, EXIT_VALIDATION_ERROR)
    except (SegkitError, OSError) as exc:
        return _fail(args, exc, EXIT_RUNTIME_ERROR)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
