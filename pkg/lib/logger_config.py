#!/usr/bin/env python3
"""Logging for rcp-domains.

Results go to stdout as JSON or CSV, so every log record is written to
stderr or to the rotating log file.
"""

import logging
import logging.handlers
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, Optional

ROOT_LOGGER_NAME = "rcp-domains"
DEFAULT_LOG_DIR = Path.home() / ".local" / "share" / "rcp-domains"
DEFAULT_LOG_FILE = DEFAULT_LOG_DIR / "rcp-domains.log"

CONSOLE_FORMAT = "%(levelname)s - %(message)s"
FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(module)s:%(lineno)d - %(message)s"

MAX_LOG_BYTES = 10 * 1024 * 1024
LOG_BACKUPS = 5


def _parse_level(level: str) -> int:
    value = logging.getLevelName(level.upper())
    if not isinstance(value, int):
        raise ValueError(f"Unknown log level: {level}")
    return value


def _env_flag(name: str, default: bool) -> bool:
    raw = os.environ.get(name)
    if raw is None:
        return default
    return raw.strip().lower() in ("1", "true", "yes", "on")


def setup_logging(
    name: str = ROOT_LOGGER_NAME,
    level: str = "INFO",
    log_file: Optional[Path] = None,
    console: bool = True,
    file_logging: bool = True
) -> logging.Logger:
    """
    Configure the project logger, replacing any handlers from an earlier call.

    Args:
        name: Logger name
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Log file path, DEFAULT_LOG_FILE when omitted
        console: Log to stderr
        file_logging: Log to a rotating file (10 MB, 5 backups)

    Returns:
        Configured logger instance

    Raises:
        ValueError: If the level name is unknown
    """
    numeric_level = _parse_level(level)
    logger = logging.getLogger(name)
    logger.setLevel(numeric_level)
    for handler in logger.handlers:
        handler.close()
    logger.handlers.clear()

    if console:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(numeric_level)
        console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
        logger.addHandler(console_handler)

    if file_logging:
        path = Path(log_file).expanduser() if log_file else DEFAULT_LOG_FILE
        path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            path, maxBytes=MAX_LOG_BYTES, backupCount=LOG_BACKUPS
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
        logger.addHandler(file_handler)

    return logger


def get_logger(module_name: str) -> logging.Logger:
    """Module logger under the project namespace, e.g. ``rcp-domains.supercore``."""
    return logging.getLogger(f"{ROOT_LOGGER_NAME}.{module_name}")


def setup_from_env(level: Optional[str] = None) -> logging.Logger:
    """
    Configure logging from environment variables.

    Environment variables:
        RCP_DOMAINS_LOG_LEVEL: Logging level, WARNING by default
        RCP_DOMAINS_LOG_FILE: Path to log file
        RCP_DOMAINS_LOG_CONSOLE: Console logging on/off (default on)
        RCP_DOMAINS_LOG_FILE_ENABLED: File logging on/off (default off)

    Args:
        level: Explicit level taking precedence over RCP_DOMAINS_LOG_LEVEL
    """
    log_file = os.environ.get("RCP_DOMAINS_LOG_FILE")
    return setup_logging(
        level=level or os.environ.get("RCP_DOMAINS_LOG_LEVEL", "WARNING"),
        log_file=Path(log_file) if log_file else None,
        console=_env_flag("RCP_DOMAINS_LOG_CONSOLE", True),
        file_logging=_env_flag("RCP_DOMAINS_LOG_FILE_ENABLED", False),
    )


@contextmanager
def log_stage(logger: logging.Logger, stage: str,
              timings: Optional[Dict[str, float]] = None) -> Iterator[None]:
    """Time a block, log its duration at INFO and record it in ``timings``."""
    start = time.perf_counter()
    try:
        yield
    finally:
        elapsed = time.perf_counter() - start
        if timings is not None:
            timings[stage] = elapsed
        logger.info(f"{stage} finished in {elapsed:.3f}s")
