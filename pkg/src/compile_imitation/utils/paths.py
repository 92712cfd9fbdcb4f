"""
Path utilities for compile-imitation.

Provides functions for creating artifact directories and deriving sibling artifact
paths (loss curves next to checkpoints, plots next to reports).
"""

import logging
import os
from typing import Optional

logger = logging.getLogger(__name__)


def ensure_parent_dir(path: str) -> str:
    """Create the parent directory of ``path`` if needed and return ``path`` unchanged.

    Raises:
        OSError: If the directory cannot be created.
    """
    dirpath = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(dirpath, exist_ok=True)
    except Exception as e:
        logger.error(f"Could not create directory {dirpath}: {e}")
        raise
    return path


def get_output_dir(path: str, relative_path: Optional[str] = None) -> str:
    """Return the absolute path to an output directory, or a file inside it, creating the directory.

    Args:
        path (str): Directory to create.
        relative_path (str, optional): File or subdirectory to append.

    Returns:
        str: Absolute path to the directory or file.
    """
    output_dir = os.path.abspath(path)
    try:
        os.makedirs(output_dir, exist_ok=True)
    except Exception as e:
        logger.error(f"Could not create output directory {output_dir}: {e}")
        raise
    if relative_path:
        return os.path.join(output_dir, relative_path)
    return output_dir


def sibling_path(path: str, suffix: str) -> str:
    """Return ``path`` with its extension replaced by ``suffix`` (e.g. ``_loss.csv``)."""
    base, _ = os.path.splitext(path)
    return f"{base}{suffix}"
