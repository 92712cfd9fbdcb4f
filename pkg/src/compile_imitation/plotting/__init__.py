"""
Chart emission package.
"""
from .colors import ColorScheme
from .plotting_main import plot_loss_curve, plot_metric_bars, plot_report

__all__ = ["ColorScheme", "plot_loss_curve", "plot_metric_bars", "plot_report"]
