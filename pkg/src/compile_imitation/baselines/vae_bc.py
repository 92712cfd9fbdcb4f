"""
Single-segment VAE behavioral-cloning baseline: CompILE with M = 1 and a 32-dimensional
Gaussian latent under a standard normal prior. Execution runs the one decoded policy to
the end of the episode without the termination network.
"""

import logging
from typing import Any, Dict, Optional, Sequence, Tuple

from ..constants import DEFAULT_GAUSSIAN_DIM
from ..data.schemas import EpisodeRecord
from ..envs.factory import EnvAdapter
from ..inference.online import rollout_online
from ..models.compile_model import CompILEModel
from ..models.config import CompILEConfig, LatentKind, ModelKind, Supervision, TrainSettings
from ..training.trainer import TrainResult, config_for_records, train
from ..utils.error_helpers import ConfigError

logger = logging.getLogger(__name__)


def vae_bc_config(env: str, obs_shape: Tuple[int, ...], **overrides) -> CompILEConfig:
    """CompILEConfig of the VAE-BC baseline."""
    settings = {"z_dim": DEFAULT_GAUSSIAN_DIM, **overrides}
    settings.update(num_segments=1, latent_kind=LatentKind.GAUSSIAN, supervision=Supervision.NONE)
    return CompILEConfig.for_env(env, obs_shape, **settings)


def check_vae_bc_config(config: CompILEConfig) -> CompILEConfig:
    if config.num_segments != 1 or config.categorical or config.supervision != Supervision.NONE:
        raise ConfigError("VAE-BC needs num_segments=1, a gaussian latent and no supervision")
    return config


def vae_bc_train(
    records: Sequence[EpisodeRecord],
    settings: TrainSettings,
    config: Optional[CompILEConfig] = None,
    out_path: Optional[str] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> TrainResult:
    """Train the baseline through the CompILE objective with M = 1."""
    if config is None:
        config = config_for_records(records, num_segments=1, latent_kind=LatentKind.GAUSSIAN)
    return train(check_vae_bc_config(config), records, settings, out_path, model_kind=ModelKind.VAE_BC, metadata=metadata)


def vae_bc_execute(model: CompILEModel, record: EpisodeRecord, adapter: Optional[EnvAdapter] = None) -> float:
    """Online reward of the single decoded policy."""
    return rollout_online(model, record, adapter, num_segments=1, use_termination=False).reward
