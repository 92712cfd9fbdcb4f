"""
Checkpoint container for trained models.

A checkpoint is a single ``torch.save`` file holding a dictionary:

    format       "compile-imitation/1"
    model_kind   "compile", "surprisal" or "vae-bc"
    config       CompILEConfig.to_dict()
    state_dict   named parameter tensors (float32 unless trained in float64)
    metadata     env tag, grid variant, loss-curve CSV path, training settings
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict

import torch
from torch import nn

from ..utils.error_helpers import CheckpointError, ConfigError, OutputWriteError, raise_with_context
from ..utils.paths import ensure_parent_dir
from .compile_model import CompILEModel
from .config import CompILEConfig, ModelKind
from .surprisal import SurprisalModel

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "compile-imitation/1"

MODEL_CLASSES = {
    ModelKind.COMPILE: CompILEModel,
    ModelKind.VAE_BC: CompILEModel,
    ModelKind.SURPRISAL: SurprisalModel,
}


@dataclass
class Checkpoint:
    """A loaded checkpoint.

    Attributes:
        model_kind (ModelKind): Which model family the parameters belong to.
        config (CompILEConfig): Model configuration.
        model (nn.Module): Model with the stored parameters, in eval mode.
        metadata (dict): Free-form run metadata.
    """

    model_kind: ModelKind
    config: CompILEConfig
    model: nn.Module
    metadata: Dict[str, Any] = field(default_factory=dict)


def build_model(model_kind: ModelKind, config: CompILEConfig) -> nn.Module:
    return MODEL_CLASSES[ModelKind(model_kind)](config)


def save_checkpoint(path: str, model_kind: ModelKind, model: nn.Module, metadata: Dict[str, Any] = None) -> str:
    """Write ``model`` and its config to ``path``.

    Raises:
        OutputWriteError: If the file cannot be written.
    """
    payload = {
        "format": CHECKPOINT_FORMAT,
        "model_kind": ModelKind(model_kind).value,
        "config": model.config.to_dict(),
        "state_dict": {k: v.detach().cpu() for k, v in model.state_dict().items()},
        "metadata": dict(metadata or {}),
    }
    try:
        ensure_parent_dir(path)
        torch.save(payload, path)
    except OSError as e:
        logger.error(f"Could not write checkpoint {path}: {e}")
        raise OutputWriteError(f"Could not write checkpoint {path}: {e}")
    logger.debug(f"Saved {payload['model_kind']} checkpoint to {path}")
    return path


def load_checkpoint(path: str) -> Checkpoint:
    """Load a checkpoint written by ``save_checkpoint``.

    Raises:
        FileNotFoundError: If ``path`` does not exist.
        CheckpointError: If the file is not a valid checkpoint.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise_with_context(CheckpointError, f"Could not read checkpoint {path}", str(e))
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a {CHECKPOINT_FORMAT} checkpoint")
    try:
        kind = ModelKind(payload["model_kind"])
        config = CompILEConfig.from_dict(payload["config"])
        model = build_model(kind, config)
        state = payload["state_dict"]
        dtype = next(iter(state.values())).dtype if state else torch.float32
        model.to(dtype)
        model.load_state_dict(state)
    except (KeyError, ValueError, RuntimeError, ConfigError) as e:
        raise_with_context(CheckpointError, f"Malformed checkpoint {path}", str(e))
    model.eval()
    return Checkpoint(model_kind=kind, config=config, model=model, metadata=payload.get("metadata", {}))
