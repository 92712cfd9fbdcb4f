"""
Centralized logging setup for compile-imitation.

Provides setup_logging() and get_logger() for consistent logger configuration across
modules. The default level is read from the COMPILE_LOG environment variable.
"""

import logging
import os
import sys
from typing import Optional, Union

from ..constants import LOG_LEVELS

_LOGGER_INITIALIZED = False


def level_from_env(default: str = "info") -> int:
    """Return the logging level named by COMPILE_LOG (info or debug).

    Args:
        default (str, optional): Level used when the variable is unset or unknown.

    Returns:
        int: A logging level constant.
    """
    name = os.environ.get("COMPILE_LOG", default).strip().lower()
    return getattr(logging, LOG_LEVELS.get(name, LOG_LEVELS[default]))


def setup_logging(level: Optional[Union[int, str]] = None, stream=sys.stderr, fmt: Optional[str] = None, force: bool = False):
    """Set up root logger with a consistent format and level. Idempotent unless forced.

    Args:
        level (int or str, optional): Logging level; defaults to COMPILE_LOG.
        stream (file-like, optional): Output stream for logs (default: sys.stderr).
        fmt (str, optional): Log message format string.
        force (bool, optional): Reconfigure even if logging was already set up.
    """
    global _LOGGER_INITIALIZED
    if _LOGGER_INITIALIZED and not force:
        return
    if level is None:
        level = level_from_env()
    elif isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)
    fmt = fmt or "[%(asctime)s] %(levelname)s %(name)s: %(message)s"
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    if not root_logger.handlers or force:
        for handler in list(root_logger.handlers):
            root_logger.removeHandler(handler)
        handler = logging.StreamHandler(stream)
        handler.setFormatter(logging.Formatter(fmt))
        root_logger.addHandler(handler)
    _LOGGER_INITIALIZED = True

    # Third-party chatter stays at WARNING
    for logger_name in ["matplotlib", "PIL"]:
        logging.getLogger(logger_name).setLevel(logging.WARNING)


def get_logger(name: Optional[str] = None, level: Optional[int] = None) -> logging.Logger:
    """Get a logger with the given name, ensuring centralized config is applied.

    Args:
        name (str, optional): Logger name.
        level (int, optional): Logging level to set for this logger.

    Returns:
        logging.Logger: Configured logger instance.
    """
    setup_logging()
    logger = logging.getLogger(name)
    if level is not None:
        logger.setLevel(level)
    return logger


def progress_enabled() -> bool:
    """Return True when tqdm progress bars should be shown (root level INFO or lower)."""
    return logging.getLogger().getEffectiveLevel() <= logging.INFO
