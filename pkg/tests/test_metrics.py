import numpy as np
import pytest
import torch
from scipy.optimize import linear_sum_assignment

from compile_imitation.evaluation.metrics import (
    METRIC_NAMES,
    boundary_accuracy,
    compute_metrics,
    episode_metrics,
    exact_match,
    f1_score,
    reconstruction_accuracy,
)
from compile_imitation.models.compile_model import CompILEModel
from compile_imitation.models.config import ModelKind
from compile_imitation.models.surprisal import SurprisalModel
from compile_imitation.utils.error_helpers import ConfigError
from conftest import make_config


@pytest.mark.parametrize(
    "pred,true,tol,expected",
    [
        ([4, 8], [4, 8], 0, 1.0),
        ([4, 9], [4, 8], 0, 0.5),
        ([4, 9], [4, 8], 1, 1.0),
        ([], [4], 0, 0.0),
        ([4], [], 0, 0.0),
        ([], [], 0, 1.0),
        ([3, 4], [4], 1, 2 / 3),
    ],
)
def test_f1_examples(pred, true, tol, expected):
    assert f1_score(pred, true, tol) == pytest.approx(expected)


def brute_force_f1(pred, true, tol):
    if not pred or not true:
        return f1_score(pred, true, tol)
    compatible = np.array([[abs(p - t) <= tol for t in true] for p in pred], dtype=float)
    rows, cols = linear_sum_assignment(-compatible)
    matched = compatible[rows, cols].sum()
    precision, recall = matched / len(pred), matched / len(true)
    return 0.0 if matched == 0 else 2 * precision * recall / (precision + recall)


def test_greedy_matching_is_maximal():
    rng = np.random.default_rng(0)
    for _ in range(500):
        pred = sorted(rng.choice(np.arange(2, 20), size=rng.integers(0, 6), replace=False).tolist())
        true = sorted(rng.choice(np.arange(2, 20), size=rng.integers(0, 6), replace=False).tolist())
        for tol in (0, 1):
            assert f1_score(pred, true, tol) == pytest.approx(brute_force_f1(pred, true, tol)), (pred, true, tol)


def test_wider_tolerance_never_lowers_f1():
    rng = np.random.default_rng(1)
    for _ in range(200):
        pred = rng.integers(2, 15, size=3).tolist()
        true = sorted(set(rng.integers(2, 15, size=3).tolist()))
        assert f1_score(pred, true, 1) >= f1_score(pred, true, 0)


def test_negative_tolerance_raises():
    with pytest.raises(ValueError):
        f1_score([1], [1], -1)


def test_boundary_accuracy_examples():
    assert boundary_accuracy([4, 9], [4, 8]) == 0.5
    assert boundary_accuracy([], []) == 1.0
    assert boundary_accuracy([4], [4, 8]) == 0.5


def test_reconstruction_accuracy_and_exact_match():
    assert reconstruction_accuracy([1, 2, 3, 4], [1, 2, 0, 4]) == 0.75
    assert exact_match([1, 2, 3], [1, 2, 3]) == 1.0
    assert exact_match([1, 2, 3], [1, 2, 0]) == 0.0
    with pytest.raises(ValueError):
        reconstruction_accuracy([1, 2], [1])


def test_random_decoder_matches_one_in_eight():
    rng = np.random.default_rng(2)
    true = rng.integers(0, 8, size=(400, 30))
    scores = [reconstruction_accuracy(rng.integers(0, 8, size=30), t) for t in true]
    assert np.mean(scores) == pytest.approx(1 / 8, abs=0.01)


def test_replay_oracle_scores_perfectly(grid_records, tiny_config, monkeypatch):
    record = grid_records[0]
    model = CompILEModel(tiny_config)

    def oracle(obs, z):
        logits = torch.full((obs.shape[0], 8), -10.0)
        logits[torch.arange(obs.shape[0]), torch.as_tensor(record.actions)] = 0.0
        return logits

    monkeypatch.setattr(model, "policy_logits", oracle)
    metrics = episode_metrics(model, ModelKind.COMPILE, record, 0, 2, online=False)
    assert metrics.reconstruction == 1.0
    assert metrics.exact_match == 1.0
    assert metrics.online_reward is None


def test_compute_metrics_report(grid_records, tiny_config):
    model = CompILEModel(tiny_config)
    report = compute_metrics(model, grid_records[:4])
    assert report.num_tasks == 2 and report.num_segments == 2
    summary = report.summary()
    assert set(summary) == set(METRIC_NAMES)
    assert all(0.0 <= summary[m]["mean"] <= 1.0 for m in METRIC_NAMES if m != "online_reward")
    assert summary["online_reward"]["mean"] in np.linspace(0, 100, 5)
    rows = report.rows()
    assert {r["metric"] for r in rows} == set(METRIC_NAMES)
    assert report.to_dict()["episodes"][0]["true_boundaries"] == list(grid_records[0].boundaries)


def test_compute_metrics_with_other_segment_count(grid_records, tiny_config):
    model = CompILEModel(tiny_config)
    report = compute_metrics(model, grid_records[:2], num_segments=3, online=False)
    assert report.num_segments == 3
    assert all(len(e.predicted_boundaries) == 2 for e in report.episodes)
    assert "online_reward" not in report.summary()


def test_surprisal_report_has_boundaries_only(grid_records, tiny_config):
    model = SurprisalModel(tiny_config)
    report = compute_metrics(model, grid_records[:3], model_kind=ModelKind.SURPRISAL)
    assert set(report.summary()) == {"boundary_accuracy", "f1_tol0", "f1_tol1"}


def test_vae_bc_report_uses_one_segment(grid_records):
    model = CompILEModel(make_config(num_segments=1, latent_kind="gaussian", z_dim=4))
    report = compute_metrics(model, grid_records[:2], num_segments=2, model_kind=ModelKind.VAE_BC)
    assert all(e.predicted_boundaries == [] for e in report.episodes)
    assert all(e.boundary_accuracy == 0.0 for e in report.episodes)


def test_compute_metrics_rejects_bad_test_sets(grid_records, reacher_records, tiny_config):
    model = CompILEModel(tiny_config)
    with pytest.raises(ConfigError):
        compute_metrics(model, [])
    with pytest.raises(ConfigError):
        compute_metrics(model, reacher_records)
