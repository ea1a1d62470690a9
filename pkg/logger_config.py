#!/usr/bin/env python3
"""
Logging setup shared by the solver package, run_all.py and the tests.

Each component gets a logger named frackac.<component> that writes to stderr
and to <log dir>/<component>.log with rotation. Solver pool workers log to
stderr only, so concurrent processes never rotate the same file.

Environment:
    FRACKAC_LOG_DIR    directory for log files (default: logs)
    FRACKAC_LOG_LEVEL  level name such as DEBUG or WARNING (default: INFO)
"""

import logging
import multiprocessing
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Optional

LOG_DIR_ENV = "FRACKAC_LOG_DIR"
LOG_LEVEL_ENV = "FRACKAC_LOG_LEVEL"
DEFAULT_LOG_DIR = "logs"

MAX_LOG_SIZE = 10 * 1024 * 1024
BACKUP_COUNT = 5

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
WORKER_FORMAT = "%(asctime)s - %(name)s[%(process)d] - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def log_dir() -> str:
    return os.environ.get(LOG_DIR_ENV) or DEFAULT_LOG_DIR


def resolve_level(level: Optional[int] = None) -> int:
    """Explicit level, else FRACKAC_LOG_LEVEL, else INFO. Unknown names fall back to INFO."""
    if level is not None:
        return level
    name = os.environ.get(LOG_LEVEL_ENV, "").strip().upper()
    value = logging.getLevelName(name) if name else logging.INFO
    return value if isinstance(value, int) else logging.INFO


def in_worker_process() -> bool:
    return multiprocessing.parent_process() is not None


def setup_logger(component: str, level: Optional[int] = None) -> logging.Logger:
    """
    Configure the logger of one component, once per process.

    Args:
        component: Component name (e.g. "solver", "harness", "run_all")
        level: Logging level; None defers to FRACKAC_LOG_LEVEL

    Returns:
        Logger named frackac.<component>
    """
    logger = logging.getLogger(f"frackac.{component.lower()}")
    if logger.handlers:
        return logger

    level = resolve_level(level)
    logger.setLevel(level)
    logger.propagate = False

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    logger.addHandler(console_handler)

    if in_worker_process():
        console_handler.setFormatter(logging.Formatter(WORKER_FORMAT, datefmt=DATE_FORMAT))
        return logger

    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)
    console_handler.setFormatter(formatter)

    directory = log_dir()
    os.makedirs(directory, exist_ok=True)
    file_handler = RotatingFileHandler(
        os.path.join(directory, f"{component.lower()}.log"),
        maxBytes=MAX_LOG_SIZE,
        backupCount=BACKUP_COUNT,
        encoding="utf-8",
    )
    file_handler.setLevel(level)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)
    return logger


def get_logger(component: str) -> logging.Logger:
    """Logger of a component, configured on first use."""
    return setup_logger(component)
