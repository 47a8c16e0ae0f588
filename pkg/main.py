#!/usr/bin/env python3
import logging
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv

from cli.commands import dispatch, parse_args
from cnst.exit_code import ExitCode
from core.errors import ConfigError, NumericalFailure
from core.logging_config import setup_logging


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = parse_args(argv)
    setup_logging(console_level=logging.INFO, file_level=logging.DEBUG)
    logger = logging.getLogger(__name__)

    try:
        dispatch(args)
    except ConfigError as e:
        logger.error(f"Configuration error ({e.key}): {e}")
        print(f"error: {e}", file=sys.stderr)
        return ExitCode.CONFIG_ERROR.value
    except NumericalFailure as e:
        logger.error(f"Numerical failure: {e}")
        print(f"error: {e}", file=sys.stderr)
        return ExitCode.NUMERICAL_FAILURE.value
    except (FileNotFoundError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return ExitCode.UNEXPECTED.value
    except Exception as e:
        logger.exception(f"An unexpected error occurred: {e}")
        return ExitCode.UNEXPECTED.value

    return ExitCode.OK.value


if __name__ == "__main__":
    exit_code = main()
    exit(exit_code)
