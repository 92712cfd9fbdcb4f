"""
Evaluation report writers.

A report is emitted twice: a CSV with one row per (model, task count, metric) and a
JSON document with the per-episode detail. ``format_report_table`` renders the CSV
rows as a console table.
"""

import logging
from typing import List, Sequence, Tuple, Union

import pandas as pd
import tabulate

from ..utils.io import load_json, save_dataframe, save_json
from ..utils.paths import sibling_path
from .metrics import MetricsReport

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["model", "env", "tasks", "segments", "metric", "mean", "std", "episodes"]


def report_frame(reports: Union[MetricsReport, Sequence[MetricsReport]]) -> pd.DataFrame:
    """Long-format DataFrame of one or more reports."""
    if isinstance(reports, MetricsReport):
        reports = [reports]
    rows = [row for report in reports for row in report.rows()]
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def report_paths(out_path: str) -> Tuple[str, str]:
    """(CSV path, JSON path) for a report output path."""
    return sibling_path(out_path, ".csv"), sibling_path(out_path, ".json")


def write_report(reports: Union[MetricsReport, Sequence[MetricsReport]], out_path: str, extra: dict = None) -> Tuple[str, str]:
    """Write the CSV and JSON forms of an evaluation report.

    Args:
        reports: One MetricsReport or several.
        out_path (str): Report path; the extension is replaced by .csv and .json.
        extra (dict, optional): Additional top-level JSON fields (checkpoint, data paths).

    Returns:
        tuple: (csv_path, json_path).

    Raises:
        OutputWriteError: If either file cannot be written.
    """
    if isinstance(reports, MetricsReport):
        reports = [reports]
    csv_path, json_path = report_paths(out_path)
    save_dataframe(report_frame(reports), csv_path)
    payload = {**(extra or {}), "reports": [r.to_dict() for r in reports]}
    save_json(payload, json_path)
    logger.info(f"Report written to {csv_path} and {json_path}")
    return csv_path, json_path


def load_report_frame(path: str) -> pd.DataFrame:
    """Read a report CSV (or the CSV next to a report JSON)."""
    if path.endswith(".json"):
        path = sibling_path(path, ".csv")
    return pd.read_csv(path)


def load_report_json(path: str) -> dict:
    return load_json(sibling_path(path, ".json"))


def format_report_table(frame: pd.DataFrame, tablefmt: str = "github") -> str:
    """Console table of a report frame: one row per model / task count, metrics as columns."""
    if frame.empty:
        return "(empty report)"
    frame = frame.assign(value=[f"{m:.3f} ± {s:.3f}" for m, s in zip(frame["mean"], frame["std"])])
    table = frame.pivot_table(index=["model", "tasks", "segments"], columns="metric", values="value", aggfunc="first")
    table = table.reset_index()
    headers: List[str] = [str(c) for c in table.columns]
    return tabulate.tabulate(table.values.tolist(), headers=headers, tablefmt=tablefmt)
