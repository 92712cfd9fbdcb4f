"""
State encoders and per-step input embedders.

Grid observations go through a two-layer 3x3 CNN (64 maps, ReLU) followed by a linear
layer; reacher observations through a two-layer ReLU MLP. A step embedder concatenates
the encoded state with a learned action embedding and layer-normalizes the result.
"""

import logging
from typing import Tuple

import torch
from torch import nn

from ..utils.error_helpers import ConfigError
from .config import CompILEConfig

logger = logging.getLogger(__name__)

CNN_CHANNELS = 64


class GridStateEncoder(nn.Module):
    """(…, S, S, C) binary grids -> (…, hidden) features."""

    def __init__(self, obs_shape: Tuple[int, ...], hidden: int):
        super().__init__()
        size, size_w, channels = obs_shape
        self.obs_shape = tuple(obs_shape)
        self.conv = nn.Sequential(
            nn.Conv2d(channels, CNN_CHANNELS, kernel_size=3, padding=1),
            nn.ReLU(),
            nn.Conv2d(CNN_CHANNELS, CNN_CHANNELS, kernel_size=3, padding=1),
            nn.ReLU(),
        )
        self.linear = nn.Linear(CNN_CHANNELS * size * size_w, hidden)

    def forward(self, obs: torch.Tensor) -> torch.Tensor:
        lead = obs.shape[:-3]
        if tuple(obs.shape[-3:]) != self.obs_shape:
            raise ValueError(f"expected grid observations of shape {self.obs_shape}, got {tuple(obs.shape[-3:])}")
        x = obs.reshape((-1,) + self.obs_shape).permute(0, 3, 1, 2)
        x = self.conv(x).flatten(start_dim=1)
        return self.linear(x).reshape(lead + (-1,))


class MLPStateEncoder(nn.Module):
    """(…, D) vectors -> (…, hidden) features through two ReLU layers."""

    def __init__(self, obs_dim: int, hidden: int):
        super().__init__()
        self.obs_dim = obs_dim
        self.net = nn.Sequential(
            nn.Linear(obs_dim, hidden),
            nn.ReLU(),
            nn.Linear(hidden, hidden),
            nn.ReLU(),
        )

    def forward(self, obs: torch.Tensor) -> torch.Tensor:
        if obs.shape[-1] != self.obs_dim:
            raise ValueError(f"expected observations of width {self.obs_dim}, got {obs.shape[-1]}")
        return self.net(obs)


def make_state_encoder(config: CompILEConfig) -> nn.Module:
    """State encoder matching the config's environment."""
    if config.env == "grid":
        if len(config.obs_shape) != 3:
            raise ConfigError(f"grid observations must be 3-d, got {config.obs_shape}")
        return GridStateEncoder(config.obs_shape, config.hidden)
    if config.env == "reacher":
        if len(config.obs_shape) != 1:
            raise ConfigError(f"reacher observations must be 1-d, got {config.obs_shape}")
        return MLPStateEncoder(config.obs_shape[0], config.hidden)
    raise ConfigError(f"no state encoder for env '{config.env}'")


class StepEmbedder(nn.Module):
    """Embeds (s_t, a_t) pairs: encoded state ++ action embedding -> linear -> LayerNorm."""

    def __init__(self, config: CompILEConfig):
        super().__init__()
        self.state_encoder = make_state_encoder(config)
        self.action_embedding = nn.Embedding(config.num_actions, config.hidden)
        self.project = nn.Linear(2 * config.hidden, config.hidden)
        self.norm = nn.LayerNorm(config.hidden)

    def forward(self, obs: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        state = self.state_encoder(obs)
        action = self.action_embedding(actions.long())
        return self.norm(self.project(torch.cat([state, action], dim=-1)))


def mlp(in_dim: int, hidden: int, out_dim: int, layers: int) -> nn.Module:
    """``layers`` ReLU hidden layers then a linear output (layers=0: a single linear map)."""
    modules = []
    width = in_dim
    for _ in range(layers):
        modules += [nn.Linear(width, hidden), nn.ReLU()]
        width = hidden
    modules.append(nn.Linear(width, out_dim))
    return nn.Sequential(*modules)
