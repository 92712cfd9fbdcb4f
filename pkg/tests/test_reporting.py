import json
import os

import pandas as pd
import pytest

from compile_imitation.evaluation.metrics import EpisodeMetrics, MetricsReport
from compile_imitation.evaluation.reporting import (
    REPORT_COLUMNS,
    format_report_table,
    load_report_frame,
    load_report_json,
    report_frame,
    write_report,
)
from compile_imitation.plotting.colors import ColorScheme
from compile_imitation.plotting.plotting_main import plot_loss_curve, plot_metric_bars, plot_report, smooth


def episode(index, predicted, true, recon=None, reward=None):
    hits = sum(int(p == t) for p, t in zip(predicted, true))
    return EpisodeMetrics(
        index=index,
        seed=index,
        predicted_boundaries=predicted,
        true_boundaries=true,
        boundary_accuracy=hits / max(len(predicted), len(true), 1),
        f1_tol0=1.0,
        f1_tol1=1.0,
        reconstruction=recon,
        exact_match=None if recon is None else float(recon == 1.0),
        online_reward=reward,
    )


@pytest.fixture
def compile_report():
    return MetricsReport(
        model_kind="compile",
        env="grid",
        num_segments=2,
        num_tasks=2,
        episodes=[episode(0, [4], [4], 1.0, 100.0), episode(1, [5], [4], 0.5, 0.0)],
    )


@pytest.fixture
def surprisal_report():
    return MetricsReport("surprisal", "grid", 2, 2, [episode(0, [3], [4])])


def test_summary_statistics(compile_report):
    summary = compile_report.summary()
    assert summary["boundary_accuracy"] == {"mean": 0.5, "std": 0.5, "n": 2}
    assert summary["online_reward"]["mean"] == 50.0
    assert summary["exact_match"]["mean"] == 0.5


def test_report_frame_is_long_format(compile_report, surprisal_report):
    frame = report_frame([compile_report, surprisal_report])
    assert list(frame.columns) == REPORT_COLUMNS
    assert len(frame) == 6 + 3
    assert set(frame[frame["model"] == "surprisal"]["metric"]) == {"boundary_accuracy", "f1_tol0", "f1_tol1"}


def test_write_report_emits_csv_and_json(tmp_path, compile_report):
    out = str(tmp_path / "reports" / "eval.csv")
    csv_path, json_path = write_report(compile_report, out, extra={"checkpoint": "m.pt"})
    assert csv_path == str(tmp_path / "reports" / "eval.csv")
    assert json_path == str(tmp_path / "reports" / "eval.json")
    frame = load_report_frame(json_path)
    pd.testing.assert_frame_equal(frame, report_frame(compile_report), check_dtype=False)
    payload = load_report_json(csv_path)
    assert payload["checkpoint"] == "m.pt"
    assert payload["reports"][0]["episodes"][1]["predicted_boundaries"] == [5]


def test_format_report_table(compile_report, surprisal_report):
    table = format_report_table(report_frame([compile_report, surprisal_report]))
    assert "compile" in table and "surprisal" in table
    assert "0.500 ± 0.500" in table
    assert format_report_table(pd.DataFrame(columns=REPORT_COLUMNS)) == "(empty report)"


def test_colors():
    assert ColorScheme.loss_color("kl_b") == ColorScheme.KL_B
    assert ColorScheme.loss_color("unknown") == ColorScheme.FALLBACK
    assert ColorScheme.model_color("vae-bc") == ColorScheme.MODEL_COLORS["vae-bc"]


def test_smoothing_is_a_trailing_mean():
    assert smooth(pd.Series([1.0, 3.0, 5.0]), 2).tolist() == [1.0, 2.0, 4.0]


def test_loss_curve_plot(tmp_path):
    curve = pd.DataFrame({"iteration": range(1, 21), "total": range(20, 0, -1), "recon": range(20), "kl_b": [0.1] * 20})
    path = plot_loss_curve(curve, str(tmp_path / "loss.png"))
    assert os.path.getsize(path) > 0
    with pytest.raises(ValueError):
        plot_loss_curve(curve.iloc[:0], str(tmp_path / "empty.png"))


def test_metric_bars_need_metrics(tmp_path, compile_report):
    frame = report_frame(compile_report)
    assert os.path.exists(plot_metric_bars(frame, str(tmp_path / "bars.png")))
    with pytest.raises(ValueError):
        plot_metric_bars(frame[frame["metric"] == "nothing"], str(tmp_path / "none.png"))


def test_plot_report_writes_charts_and_csv_copies(tmp_path, compile_report):
    curve_path = tmp_path / "model_loss.csv"
    pd.DataFrame({"iteration": [1, 2, 3], "total": [3.0, 2.0, 1.0]}).to_csv(curve_path, index=False)
    csv_path, _ = write_report(compile_report, str(tmp_path / "eval.csv"), extra={"loss_curve": str(curve_path)})
    written = plot_report(csv_path, str(tmp_path / "plots"))
    names = sorted(os.path.basename(p) for p in written)
    assert names == ["eval_loss.png", "eval_metrics.csv", "eval_metrics.png", "model_loss.csv"]
    assert all(os.path.exists(p) for p in written)


def test_plot_report_without_loss_curve(tmp_path, compile_report):
    csv_path, json_path = write_report(compile_report, str(tmp_path / "eval.csv"), extra={"loss_curve": str(tmp_path / "gone.csv")})
    written = plot_report(csv_path, str(tmp_path / "plots"))
    assert len(written) == 2
    with open(json_path) as f:
        assert json.load(f)["loss_curve"].endswith("gone.csv")
