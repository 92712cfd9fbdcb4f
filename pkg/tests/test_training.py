import os

import pandas as pd
import pytest
import torch

from compile_imitation.models.checkpoint import load_checkpoint, save_checkpoint
from compile_imitation.models.compile_model import CompILEModel
from compile_imitation.models.config import ModelKind, Supervision, TrainSettings
from compile_imitation.training import trainer
from compile_imitation.training.elbo import LossReport
from compile_imitation.training.trainer import CURVE_COLUMNS, config_for_records, dataset_batch, fit, train
from compile_imitation.utils.error_helpers import CheckpointError, ConfigError, TrainingDivergenceError
from conftest import make_config

FAST = dict(batch_size=8, lr=1e-3, log_every=0)


def test_training_smoke_writes_artifacts(tmp_path, grid_records, tiny_config):
    out = str(tmp_path / "model.pt")
    result = train(tiny_config, grid_records, TrainSettings(iterations=5, **FAST), out_path=out)
    assert os.path.exists(out)
    assert result.curve_path == str(tmp_path / "model_loss.csv")
    curve = pd.read_csv(result.curve_path)
    assert list(curve.columns) == CURVE_COLUMNS
    assert curve["iteration"].tolist() == [1, 2, 3, 4, 5]
    assert curve["total"].notna().all()
    assert not result.model.training


def test_training_is_deterministic(grid_records, tiny_config):
    settings = TrainSettings(iterations=4, seed=3, **FAST)
    first = train(tiny_config, grid_records, settings)
    second = train(tiny_config, grid_records, settings)
    pd.testing.assert_frame_equal(first.curve, second.curve)


def test_training_reduces_loss(grid_records):
    config = make_config(num_latents=4, supervision=Supervision.B, hidden=32)
    result = train(config, grid_records, TrainSettings(iterations=120, seed=0, **FAST))
    head = result.curve["recon"].iloc[:10].mean()
    tail = result.curve["recon"].iloc[-10:].mean()
    assert tail < head


def test_annealed_temperature_reaches_its_target():
    settings = TrainSettings(iterations=11, anneal_to=0.5)
    assert settings.temperature_at(0, 1.0) == 1.0
    assert settings.temperature_at(10, 1.0) == pytest.approx(0.5)
    assert settings.temperature_at(5, 1.0) == pytest.approx(0.75)
    assert TrainSettings(iterations=11).temperature_at(10, 1.0) == 1.0


@pytest.mark.parametrize("overrides", [dict(iterations=-1), dict(batch_size=0), dict(lr=0.0), dict(anneal_to=0.0)])
def test_invalid_settings_are_rejected(overrides):
    with pytest.raises(ConfigError):
        TrainSettings(**overrides).validate()


def test_non_finite_loss_raises(grid_records, tiny_config):
    model = CompILEModel(tiny_config)
    batch = dataset_batch(grid_records, "grid")

    def exploding(mini, generator, tau):
        nan = torch.tensor(float("nan"))
        return LossReport(nan, nan, nan.reshape(1), nan, nan, nan, nan, nan, nan.reshape(1))

    with pytest.raises(TrainingDivergenceError):
        fit(model, batch, TrainSettings(iterations=3, **FAST), exploding, ModelKind.COMPILE)


def test_dataset_env_mismatch_is_rejected(reacher_records, tiny_config):
    with pytest.raises(ConfigError):
        train(tiny_config, reacher_records, TrainSettings(iterations=1, **FAST))
    with pytest.raises(ConfigError):
        dataset_batch([], "grid")


def test_observation_shape_mismatch_is_rejected(grid_records):
    config = make_config(obs_shape=(10, 10, 12))
    with pytest.raises(ConfigError):
        train(config, grid_records, TrainSettings(iterations=1, **FAST))


def test_config_for_records_reads_the_data(grid_records, reacher_records):
    assert config_for_records(grid_records, hidden=8).obs_shape == (6, 6, 12)
    reacher = config_for_records(reacher_records, hidden=8)
    assert reacher.num_actions == 25 and reacher.policy_layers == 2


def test_periodic_checkpoints(tmp_path, grid_records, tiny_config, monkeypatch):
    saved = []
    real_save = trainer.save_checkpoint

    def recording_save(path, kind, model, metadata):
        saved.append(metadata["iteration"])
        return real_save(path, kind, model, metadata)

    monkeypatch.setattr(trainer, "save_checkpoint", recording_save)
    train(tiny_config, grid_records, TrainSettings(iterations=4, checkpoint_every=2, **FAST), out_path=str(tmp_path / "m.pt"))
    assert saved == [2, 4, 4]


def test_checkpoint_round_trip(tmp_path, grid_records, tiny_config):
    out = str(tmp_path / "ckpt.pt")
    result = train(tiny_config, grid_records, TrainSettings(iterations=2, **FAST), out_path=out, metadata={"data": "d.jsonl"})
    ckpt = load_checkpoint(out)
    assert ckpt.model_kind == ModelKind.COMPILE
    assert ckpt.config == tiny_config
    assert ckpt.metadata["data"] == "d.jsonl"
    assert ckpt.metadata["loss_curve"] == result.curve_path
    assert ckpt.metadata["settings"]["iterations"] == 2
    for (name, a), (_, b) in zip(result.model.state_dict().items(), ckpt.model.state_dict().items()):
        assert torch.equal(a, b), name


def test_double_precision_checkpoint_round_trip(tmp_path, tiny_config):
    model = CompILEModel(tiny_config).double()
    path = save_checkpoint(str(tmp_path / "d.pt"), ModelKind.COMPILE, model, {})
    assert next(load_checkpoint(path).model.parameters()).dtype == torch.float64


def test_missing_and_malformed_checkpoints(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(str(tmp_path / "none.pt"))
    bogus = tmp_path / "bogus.pt"
    torch.save({"format": "something-else"}, bogus)
    with pytest.raises(CheckpointError):
        load_checkpoint(str(bogus))
    garbage = tmp_path / "garbage.pt"
    garbage.write_bytes(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        load_checkpoint(str(garbage))
