"""
I/O utilities for compile-imitation.

Centralizes DataFrame-to-file logic and JSON writing for reports, loss curves and
segmentation outputs.
"""

import json
import logging
import os
from typing import Any, Literal, Optional

import numpy as np
import pandas as pd

from .error_helpers import OutputWriteError
from .paths import ensure_parent_dir

logger = logging.getLogger(__name__)


def _to_builtin(obj: Any) -> Any:
    """json.dump default hook for numpy scalars and arrays."""
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def save_dataframe(
    df: pd.DataFrame,
    path: str,
    fmt: Optional[str] = None,
    orient: Literal["split", "records", "index", "columns", "values", "table"] = "records",
    indent: int = 2
) -> str:
    """Save a DataFrame to CSV or JSON with error handling.

    Args:
        df (pd.DataFrame): DataFrame to save.
        path (str): Output file path.
        fmt (str, optional): File format ('csv' or 'json'). If None, inferred from file extension.
        orient (str, optional): JSON orientation (if saving as JSON).
        indent (int, optional): Indentation for JSON output.

    Returns:
        str: The path written.

    Raises:
        ValueError: If the file format is unsupported.
        OutputWriteError: If saving fails due to I/O errors.
    """
    fmt = fmt or os.path.splitext(path)[1][1:].lower()
    if fmt not in ("csv", "json"):
        logger.error(f"Unsupported file format: {fmt}")
        raise ValueError(f"Unsupported file format: {fmt}")
    try:
        ensure_parent_dir(path)
        if fmt == "csv":
            df.to_csv(path, index=False)
        else:
            df.to_json(path, orient=orient, indent=indent)
    except OSError as e:
        logger.error(f"Could not save DataFrame to {path}: {e}")
        raise OutputWriteError(f"Could not save DataFrame to {path}: {e}")
    return path


def save_json(payload: Any, path: str, indent: int = 2) -> str:
    """Write a JSON document (numpy values converted) and return the path.

    Raises:
        OutputWriteError: If the file cannot be written.
    """
    try:
        ensure_parent_dir(path)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=indent, default=_to_builtin)
            f.write("\n")
    except OSError as e:
        logger.error(f"Could not write JSON to {path}: {e}")
        raise OutputWriteError(f"Could not write JSON to {path}: {e}")
    return path


def load_json(path: str) -> Any:
    """Read a JSON document."""
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
