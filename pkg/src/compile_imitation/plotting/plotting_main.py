"""
Offline chart emission for training and evaluation artifacts.

- Loss curves: raw and moving-average curves of every loss component.
- Metric bars: mean ± std per metric, one bar group per model / task count.

Figures are written as PNG files next to the CSV they were drawn from.
"""

import logging
import os
import shutil
from typing import List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from ..evaluation.reporting import load_report_frame, load_report_json
from ..utils.error_helpers import OutputWriteError
from ..utils.paths import get_output_dir
from .colors import ColorScheme

logger = logging.getLogger(__name__)

LOSS_COMPONENTS = ["total", "recon", "kl_z", "kl_b", "term_bce", "sup"]
RATE_METRICS = ["boundary_accuracy", "f1_tol0", "f1_tol1", "reconstruction", "exact_match"]


def smooth(values: pd.Series, window: int) -> pd.Series:
    return values.rolling(window=max(1, window), min_periods=1).mean()


def _save(fig, path: str) -> str:
    try:
        fig.savefig(path, dpi=120, bbox_inches="tight")
    except OSError as e:
        raise OutputWriteError(f"Could not save figure {path}: {e}")
    finally:
        plt.close(fig)
    logger.info(f"Figure saved to {path}")
    return path


def plot_loss_curve(curve: pd.DataFrame, out_path: str, window: Optional[int] = None, title: str = "Training loss") -> str:
    """Plot every loss component against the iteration.

    Args:
        curve (pd.DataFrame): Loss curve with an ``iteration`` column.
        out_path (str): PNG path.
        window (int, optional): Moving-average window; defaults to 2% of the run.
        title (str): Figure title.

    Returns:
        str: The PNG path.
    """
    if curve.empty:
        raise ValueError("loss curve is empty")
    window = window or max(1, len(curve) // 50)
    fig, (ax_total, ax_parts) = plt.subplots(1, 2, figsize=(12, 4.5))
    for column, ax in [("total", ax_total)] + [(c, ax_parts) for c in LOSS_COMPONENTS[1:]]:
        if column not in curve:
            continue
        color = ColorScheme.loss_color(column)
        if column == "total":
            ax.plot(curve["iteration"], curve[column], color=color, alpha=ColorScheme.RAW_ALPHA, linewidth=0.8)
        ax.plot(curve["iteration"], smooth(curve[column], window), color=color, alpha=ColorScheme.SMOOTHED_ALPHA, label=column)
    ax_total.set_title(title)
    ax_parts.set_title("Components (smoothed)")
    for ax in (ax_total, ax_parts):
        ax.set_xlabel("iteration")
        ax.grid(alpha=ColorScheme.GRID_ALPHA)
        ax.legend(loc="upper right", fontsize=8)
    return _save(fig, out_path)


def plot_metric_bars(frame: pd.DataFrame, out_path: str, metrics: Optional[List[str]] = None) -> str:
    """Grouped bar chart of report metrics with std error bars.

    ``online_reward`` is rescaled from [0, 100] to [0, 1] to share the axis.
    """
    metrics = metrics or [m for m in RATE_METRICS + ["online_reward"] if m in set(frame["metric"])]
    if not metrics:
        raise ValueError("report has no plottable metrics")
    groups = frame[["model", "tasks", "segments"]].drop_duplicates().values.tolist()
    width = 0.8 / max(1, len(groups))
    x = np.arange(len(metrics))
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(metrics)), 4.5))
    for g, (model, tasks, segments) in enumerate(groups):
        rows = frame[(frame["model"] == model) & (frame["tasks"] == tasks) & (frame["segments"] == segments)]
        by_metric = rows.set_index("metric")
        means, stds = [], []
        for m in metrics:
            scale = 0.01 if m == "online_reward" else 1.0
            means.append(float(by_metric["mean"].get(m, np.nan)) * scale)
            stds.append(float(by_metric["std"].get(m, 0.0)) * scale)
        ax.bar(
            x + g * width - 0.4 + width / 2, means, width, yerr=stds, capsize=3,
            color=ColorScheme.model_color(str(model)), alpha=0.6 + 0.4 * (g % 2),
            label=f"{model} ({tasks} tasks, M={segments})",
        )
    ax.set_xticks(x)
    ax.set_xticklabels([m if m != "online_reward" else "online /100" for m in metrics], rotation=20)
    ax.set_ylim(0, 1.05)
    ax.grid(axis="y", alpha=ColorScheme.GRID_ALPHA)
    ax.legend(fontsize=8)
    return _save(fig, out_path)


def plot_report(report_path: str, out_dir: str) -> List[str]:
    """Emit every chart a report supports into ``out_dir``.

    Writes the metric bar chart with a copy of the report CSV and, when the report
    names a loss-curve CSV that exists, the loss-curve figure with a copy of that CSV.

    Returns:
        list: Paths of every file written.
    """
    out_dir = get_output_dir(out_dir)
    frame = load_report_frame(report_path)
    written = []
    stem = os.path.splitext(os.path.basename(report_path))[0]
    csv_copy = os.path.join(out_dir, f"{stem}_metrics.csv")
    frame.to_csv(csv_copy, index=False)
    written += [csv_copy, plot_metric_bars(frame, os.path.join(out_dir, f"{stem}_metrics.png"))]

    try:
        meta = load_report_json(report_path)
    except (OSError, ValueError) as e:
        logger.warning(f"No report JSON next to {report_path}: {e}")
        meta = {}
    curve_path = meta.get("loss_curve")
    if curve_path and os.path.exists(curve_path):
        curve = pd.read_csv(curve_path)
        curve_copy = os.path.join(out_dir, os.path.basename(curve_path))
        if os.path.abspath(curve_copy) != os.path.abspath(curve_path):
            shutil.copyfile(curve_path, curve_copy)
        written += [curve_copy, plot_loss_curve(curve, os.path.join(out_dir, f"{stem}_loss.png"))]
    elif curve_path:
        logger.warning(f"Loss curve {curve_path} named by the report does not exist")
    return written
