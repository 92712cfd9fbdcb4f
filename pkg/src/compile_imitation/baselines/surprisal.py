"""
LSTM-surprisal segmentation baseline.

An autoregressive action model is trained by maximum likelihood; a trajectory is cut
where the taken action is least likely under the model. The surprising action starts
the new segment (b = t).
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import torch

from ..data.dataset import Batch
from ..data.schemas import EpisodeRecord
from ..models.config import CompILEConfig, ModelKind, TrainSettings
from ..models.surprisal import SurprisalModel
from ..training.elbo import LossReport
from ..training.trainer import TrainResult, dataset_batch, fit
from ..utils.error_helpers import ConfigError

logger = logging.getLogger(__name__)


def surprisal_loss(model: SurprisalModel, batch: Batch) -> LossReport:
    """Mean negative log-likelihood per unpadded step."""
    dtype = next(model.parameters()).dtype
    t = batch.tensors(dtype)
    valid = torch.as_tensor(~batch.pad_mask, dtype=dtype)
    log_lik = model.action_log_likelihoods(t["states"], t["actions"]) * valid
    nll = -log_lik.sum() / valid.sum()
    zero = nll.new_zeros(())
    return LossReport(
        total=nll,
        recon=nll,
        recon_terms=nll.reshape(1),
        kl_z=zero,
        kl_b=zero,
        sup_z=zero,
        sup_b=zero,
        term_bce=zero,
        elbo=log_lik.sum(-1),
    )


def surprisal_train(
    records: Sequence[EpisodeRecord],
    config: CompILEConfig,
    settings: TrainSettings,
    out_path: Optional[str] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> TrainResult:
    """Fit the autoregressive action model.

    Raises:
        ConfigError: On an empty dataset or an env mismatch.
        TrainingDivergenceError: If the loss becomes non-finite.
    """
    config.validate()
    batch = dataset_batch(records, config.env)
    if tuple(batch.states.shape[2:]) != config.obs_shape:
        raise ConfigError(f"data observations {tuple(batch.states.shape[2:])} do not match config {config.obs_shape}")
    torch.manual_seed(settings.seed)
    model = SurprisalModel(config)

    def loss_fn(mini: Batch, generator: torch.Generator, tau: float) -> LossReport:
        return surprisal_loss(model, mini)

    return fit(model, batch, settings, loss_fn, ModelKind.SURPRISAL, out_path, {"env": config.env, **(metadata or {})})


def step_likelihoods(
    model: SurprisalModel,
    obs: Union[np.ndarray, torch.Tensor],
    actions: Union[Sequence[int], torch.Tensor],
) -> np.ndarray:
    """(T,) P(a_t | a_{1:t-1}, s_{1:t}) of the taken actions."""
    dtype = next(model.parameters()).dtype
    obs = torch.as_tensor(np.asarray(obs) if not torch.is_tensor(obs) else obs, dtype=dtype)
    actions = torch.as_tensor(actions, dtype=torch.long)
    with torch.no_grad():
        log_lik = model.action_log_likelihoods(obs.unsqueeze(0), actions.unsqueeze(0))[0]
    return log_lik.exp().cpu().numpy()


def select_surprisal_boundaries(likelihoods: Sequence[float], num_segments: int) -> List[int]:
    """The M-1 least likely steps t >= 2 (1-based), ascending; ties go to the smaller t.

    Only the ordering of ``likelihoods`` matters. Fewer boundaries are returned when the
    trajectory has fewer than M-1 candidate steps.
    """
    if num_segments < 1:
        raise ValueError(f"num_segments must be >= 1, got {num_segments}")
    candidates = sorted(range(2, len(likelihoods) + 1), key=lambda t: (likelihoods[t - 1], t))
    return sorted(candidates[: num_segments - 1])


def surprisal_segment(
    model: SurprisalModel,
    obs: Union[np.ndarray, torch.Tensor],
    actions: Union[Sequence[int], torch.Tensor],
    num_segments: int,
) -> List[int]:
    """Boundaries of one trajectory under the surprisal rule."""
    return select_surprisal_boundaries(step_likelihoods(model, obs, actions), num_segments)
