import numpy as np
import pytest
import torch

from compile_imitation.baselines.surprisal import (
    select_surprisal_boundaries,
    step_likelihoods,
    surprisal_loss,
    surprisal_segment,
    surprisal_train,
)
from compile_imitation.baselines.vae_bc import check_vae_bc_config, vae_bc_config, vae_bc_execute, vae_bc_train
from compile_imitation.data.dataset import make_batch
from compile_imitation.inference.segment import record_tensors
from compile_imitation.models.checkpoint import load_checkpoint
from compile_imitation.models.config import LatentKind, ModelKind, Supervision, TrainSettings
from compile_imitation.models.surprisal import SurprisalModel
from compile_imitation.utils.error_helpers import ConfigError
from conftest import make_config

FAST = dict(batch_size=8, lr=1e-3, log_every=0)


def test_least_likely_steps_become_boundaries():
    assert select_surprisal_boundaries([0.9, 0.1, 0.8, 0.2, 0.9], 3) == [2, 4]


def test_first_step_is_never_a_boundary():
    assert select_surprisal_boundaries([0.01, 0.5, 0.4], 2) == [3]


def test_ties_go_to_the_earlier_step():
    assert select_surprisal_boundaries([0.5] * 6, 3) == [2, 3]


def test_only_the_ordering_matters():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = rng.random(12)
        assert select_surprisal_boundaries(p, 4) == select_surprisal_boundaries(p ** 3 * 0.01, 4)


def test_single_segment_and_short_trajectories():
    assert select_surprisal_boundaries([0.2, 0.1], 1) == []
    assert select_surprisal_boundaries([0.2, 0.1], 4) == [2]
    with pytest.raises(ValueError):
        select_surprisal_boundaries([0.2], 0)


def test_surprisal_model_is_causal(tiny_config):
    model = SurprisalModel(tiny_config)
    gen = torch.Generator().manual_seed(0)
    obs = torch.rand(1, 6, 6, 6, 12, generator=gen)
    actions = torch.randint(0, 8, (1, 6), generator=gen)
    base = model.action_log_likelihoods(obs, actions)
    obs2, actions2 = obs.clone(), actions.clone()
    obs2[:, 4:] = 0.0
    actions2[:, 5] = (actions2[:, 5] + 1) % 8
    changed = model.action_log_likelihoods(obs2, actions2)
    assert torch.allclose(base[:, :4], changed[:, :4])


def test_step_likelihoods_are_probabilities(tiny_config, grid_records):
    model = SurprisalModel(tiny_config)
    obs, actions = record_tensors(grid_records[0])
    p = step_likelihoods(model, obs, actions)
    assert p.shape == (len(actions),)
    assert ((p > 0) & (p <= 1)).all()
    assert len(surprisal_segment(model, obs, actions, 2)) == 1


def test_surprisal_loss_is_mean_nll(tiny_config, grid_records):
    model = SurprisalModel(tiny_config)
    batch = make_batch(grid_records[:3], 42)
    report = surprisal_loss(model, batch)
    t = batch.tensors()
    with torch.no_grad():
        log_lik = model.action_log_likelihoods(t["states"], t["actions"])
    valid = torch.as_tensor(~batch.pad_mask, dtype=torch.float32)
    expected = -(log_lik * valid).sum() / valid.sum()
    assert float(report.total) == pytest.approx(float(expected), rel=1e-5)
    assert float(report.kl_z) == 0.0


def test_surprisal_training_overfits_and_checkpoints(tmp_path, grid_records):
    config = make_config(hidden=32)
    out = str(tmp_path / "surprisal.pt")
    result = surprisal_train(grid_records, config, TrainSettings(iterations=150, **FAST), out_path=out, metadata={"data": "x"})
    assert result.curve["total"].iloc[-10:].mean() < result.curve["total"].iloc[:10].mean()
    ckpt = load_checkpoint(out)
    assert ckpt.model_kind == ModelKind.SURPRISAL
    assert isinstance(ckpt.model, SurprisalModel)
    assert ckpt.metadata["data"] == "x"


def test_vae_bc_config_forces_single_gaussian_segment():
    config = vae_bc_config("grid", (6, 6, 12), hidden=16, num_segments=4, supervision="b")
    assert config.num_segments == 1
    assert config.latent_kind == LatentKind.GAUSSIAN
    assert config.z_dim == 32
    assert config.supervision == Supervision.NONE


def test_vae_bc_rejects_segmented_configs():
    with pytest.raises(ConfigError):
        check_vae_bc_config(make_config())


def test_vae_bc_train_and_execute(tmp_path, grid_records):
    out = str(tmp_path / "vae.pt")
    config = vae_bc_config("grid", (6, 6, 12), hidden=16, z_dim=4)
    result = vae_bc_train(grid_records, TrainSettings(iterations=3, **FAST), config, out_path=out)
    assert float(result.curve["kl_b"].abs().max()) == 0.0
    assert load_checkpoint(out).model_kind == ModelKind.VAE_BC
    assert vae_bc_execute(result.model, grid_records[0]) in (0.0, 100.0)


def test_vae_bc_default_config_comes_from_data(grid_records):
    result = vae_bc_train(grid_records[:4], TrainSettings(iterations=1, **FAST))
    assert result.model.config.num_segments == 1
    assert result.model.config.obs_shape == (6, 6, 12)
