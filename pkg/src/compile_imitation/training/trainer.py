"""
Training loop shared by CompILE, VAE-BC and the surprisal baseline.

Adam on mini-batches sampled without replacement from a pre-built padded batch of the
whole dataset. Parameter init, batch sampling and Gumbel noise are all derived from
``TrainSettings.seed`` so identical settings reproduce identical loss curves.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import torch
from torch import nn
from tqdm import tqdm

from ..data.dataset import Batch, make_batch
from ..data.schemas import EpisodeRecord
from ..envs.factory import get_adapter
from ..models.checkpoint import save_checkpoint
from ..models.compile_model import CompILEModel
from ..models.config import CompILEConfig, ModelKind, TrainSettings
from ..utils.error_helpers import ConfigError, TrainingDivergenceError
from ..utils.io import save_dataframe
from ..utils.logging import progress_enabled
from ..utils.paths import sibling_path
from .elbo import LossReport, elbo_loss

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ["iteration", "total", "recon", "kl_z", "kl_b", "term_bce", "sup"]

LossFn = Callable[[Batch, torch.Generator, float], LossReport]


@dataclass
class TrainResult:
    """Outcome of a training run.

    Attributes:
        model (nn.Module): Trained model, in eval mode.
        curve (pd.DataFrame): Loss curve with CURVE_COLUMNS.
        checkpoint_path (str, optional): Final checkpoint, if an output path was given.
        curve_path (str, optional): Loss-curve CSV next to the checkpoint.
    """

    model: nn.Module
    curve: pd.DataFrame
    checkpoint_path: Optional[str] = None
    curve_path: Optional[str] = None


def noise_generator(seed: int, iteration: int) -> torch.Generator:
    return torch.Generator().manual_seed(int(seed) * 1_000_003 + int(iteration))


def dataset_batch(records: Sequence[EpisodeRecord], env: Optional[str] = None) -> Batch:
    """Whole-dataset padded batch.

    Raises:
        ConfigError: If the dataset is empty or from another environment.
    """
    if not records:
        raise ConfigError("dataset is empty")
    if env is not None and any(r.env != env for r in records):
        raise ConfigError(f"dataset contains episodes that are not '{env}' episodes")
    return make_batch(records, max_T=max(len(r.actions) for r in records))


def config_for_records(records: Sequence[EpisodeRecord], **overrides) -> CompILEConfig:
    """CompILEConfig with env, action count and observation shape taken from the data."""
    if not records:
        raise ConfigError("dataset is empty")
    adapter = get_adapter(records[0].env)
    return CompILEConfig.for_env(records[0].env, adapter.obs_shape(records[0]), **overrides)


def fit(
    model: nn.Module,
    batch: Batch,
    settings: TrainSettings,
    loss_fn: LossFn,
    model_kind: ModelKind,
    out_path: Optional[str] = None,
    metadata: Optional[Dict[str, Any]] = None,
    temperature: float = 1.0,
) -> TrainResult:
    """Optimise ``model`` with Adam.

    Args:
        model (nn.Module): Model to train in place.
        batch (Batch): Whole dataset as one padded batch.
        settings (TrainSettings): Loop settings.
        loss_fn (callable): (mini-batch, noise generator, temperature) -> LossReport.
        model_kind (ModelKind): Stored in checkpoints.
        out_path (str, optional): Checkpoint path; the loss curve goes to ``<stem>_loss.csv``.
        metadata (dict, optional): Extra checkpoint metadata.
        temperature (float): Starting temperature of the annealing schedule.

    Returns:
        TrainResult: Model, loss curve and artifact paths.

    Raises:
        TrainingDivergenceError: If a loss becomes non-finite.
    """
    settings.validate()
    rng = np.random.default_rng(settings.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=settings.lr)
    size = min(settings.batch_size, batch.size)
    curve_path = sibling_path(out_path, "_loss.csv") if out_path else None
    meta = dict(metadata or {})
    meta.update({"settings": asdict(settings), "loss_curve": curve_path})
    rows: List[Dict[str, float]] = []

    model.train()
    for it in tqdm(range(settings.iterations), desc=f"train {ModelKind(model_kind).value}", disable=not progress_enabled()):
        idx = np.sort(rng.choice(batch.size, size=size, replace=False))
        tau = settings.temperature_at(it, temperature)
        report = loss_fn(batch.select(idx), noise_generator(settings.seed, it), tau)
        if not torch.isfinite(report.total):
            logger.error(f"Non-finite loss at iteration {it + 1}: {report.as_row()}")
            raise TrainingDivergenceError(f"loss became non-finite at iteration {it + 1}")
        optimizer.zero_grad()
        report.total.backward()
        optimizer.step()
        row = {"iteration": it + 1, **report.as_row()}
        rows.append(row)
        if settings.log_every and (it + 1) % settings.log_every == 0:
            logger.info(
                f"iter {it + 1}: total={row['total']:.4f} recon={row['recon']:.4f} "
                f"kl_z={row['kl_z']:.4f} kl_b={row['kl_b']:.4f} term={row['term_bce']:.4f}"
            )
        if out_path and settings.checkpoint_every and (it + 1) % settings.checkpoint_every == 0:
            save_checkpoint(out_path, model_kind, model, {**meta, "iteration": it + 1})
    model.eval()

    curve = pd.DataFrame(rows, columns=CURVE_COLUMNS)
    checkpoint_path = None
    if out_path:
        save_dataframe(curve, curve_path)
        checkpoint_path = save_checkpoint(out_path, model_kind, model, {**meta, "iteration": settings.iterations})
        logger.info(f"Checkpoint written to {checkpoint_path}; loss curve to {curve_path}")
    return TrainResult(model=model, curve=curve, checkpoint_path=checkpoint_path, curve_path=curve_path)


def train(
    config: CompILEConfig,
    records: Sequence[EpisodeRecord],
    settings: TrainSettings,
    out_path: Optional[str] = None,
    model_kind: ModelKind = ModelKind.COMPILE,
    metadata: Optional[Dict[str, Any]] = None,
) -> TrainResult:
    """Train a CompILE model on a dataset.

    Args:
        config (CompILEConfig): Model configuration (env must match the data).
        records (list): Training episodes.
        settings (TrainSettings): Iterations, batch size, learning rate, seed, ...
        out_path (str, optional): Checkpoint path.
        model_kind (ModelKind): COMPILE, or VAE_BC for the single-segment baseline.
        metadata (dict, optional): Extra checkpoint metadata.

    Returns:
        TrainResult: Trained model and loss curve.

    Raises:
        ConfigError: On an empty dataset or an env / observation mismatch.
        TrainingDivergenceError: If the loss becomes non-finite.
    """
    config.validate()
    batch = dataset_batch(records, config.env)
    if tuple(batch.states.shape[2:]) != config.obs_shape:
        raise ConfigError(f"data observations {tuple(batch.states.shape[2:])} do not match config {config.obs_shape}")
    torch.manual_seed(settings.seed)
    model = CompILEModel(config)

    def loss_fn(mini: Batch, generator: torch.Generator, tau: float) -> LossReport:
        return elbo_loss(mini, model, generator=generator, temperature=tau)

    meta = {"env": config.env, **(metadata or {})}
    return fit(model, batch, settings, loss_fn, model_kind, out_path, meta, temperature=config.temperature)
