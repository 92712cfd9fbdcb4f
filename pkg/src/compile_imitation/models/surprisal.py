"""
Autoregressive LSTM action model for surprisal-based segmentation.

Models P(a_t | a_{1:t-1}, s_{1:t}): the input at step t is the encoded state s_t
concatenated with an embedding of the previous action (a start token at t = 1).
"""

import torch
import torch.nn.functional as F
from torch import nn

from .config import CompILEConfig
from .encoders import make_state_encoder


class SurprisalModel(nn.Module):
    """Causal LSTM over (s_t, a_{t-1}) with the CompILE encoder and RNN widths."""

    def __init__(self, config: CompILEConfig):
        super().__init__()
        self.config = config.validate()
        H = config.hidden
        self.start_token = config.num_actions
        self.state_encoder = make_state_encoder(config)
        self.action_embedding = nn.Embedding(config.num_actions + 1, H)
        self.project = nn.Linear(2 * H, H)
        self.norm = nn.LayerNorm(H)
        self.rnn = nn.LSTM(H, H, batch_first=True)
        self.head = nn.Linear(H, config.num_actions)

    def forward(self, obs: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        """(B, T, A) log P(a | history) for every step."""
        previous = torch.cat(
            [actions.new_full(actions.shape[:1] + (1,), self.start_token), actions[:, :-1].long()], dim=1
        )
        x = torch.cat([self.state_encoder(obs), self.action_embedding(previous)], dim=-1)
        hidden, _ = self.rnn(self.norm(self.project(x)))
        return F.log_softmax(self.head(hidden), dim=-1)

    def action_log_likelihoods(self, obs: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        """(B, T) log P(a_t | a_{1:t-1}, s_{1:t}) of the taken actions."""
        return self.forward(obs, actions).gather(-1, actions.long().unsqueeze(-1)).squeeze(-1)
