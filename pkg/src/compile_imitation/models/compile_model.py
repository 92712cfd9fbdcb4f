"""
CompILE model: masked recognition RNN with boundary and z heads, a soft mixture of
sub-task policies, and a causal termination network.

Forward passes run the shared recognition LSTM M times over the whole sequence. Pass i
multiplies the carried hidden and cell state by mask_i(t) after each step, so steps
of earlier segments are invisible to it, and its boundary sample closes segment i.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import torch
import torch.nn.functional as F
from torch import nn

from ..constants import LOG_FLOOR
from .config import CompILEConfig, Readout, SampleMode
from .encoders import StepEmbedder, make_state_encoder, mlp
from .segmentation import (
    SoftSegmentation,
    boundary_cdf,
    boundary_slot_logits,
    end_of_sequence_slots,
    gumbel_softmax,
    legal_slots,
    next_segment,
    readout_z,
    segment_probs_and_masks,
)

logger = logging.getLogger(__name__)


class RecognitionOutput(NamedTuple):
    """Per-step head outputs of one recognition pass."""

    boundary_logits: torch.Tensor
    z_logits: torch.Tensor
    attention_scores: Optional[torch.Tensor] = None


@dataclass
class Encoding:
    """Everything a forward pass infers about a batch.

    Attributes:
        embeddings (torch.Tensor): (B, T, H) step embeddings.
        boundary_logits (torch.Tensor): (B, M-1, T+1) slot logits, illegal slots masked.
        boundary_samples (torch.Tensor): (B, M-1, T+1) samples actually used.
        z_params (torch.Tensor): (B, M, K) logits, or (B, M, 2*z_dim) mean ++ log-variance.
        z_samples (torch.Tensor): (B, M, K or z_dim).
        segmentation (SoftSegmentation): segprobs and masks, (B, M, T).
        valid (torch.Tensor): (B, T) 1.0 on unpadded steps.
    """

    embeddings: torch.Tensor
    boundary_logits: torch.Tensor
    boundary_samples: torch.Tensor
    z_params: torch.Tensor
    z_samples: torch.Tensor
    segmentation: SoftSegmentation
    valid: torch.Tensor


def masked_lstm(cell: nn.LSTMCell, inputs: torch.Tensor, mask: torch.Tensor, state=None):
    """Run ``cell`` over (B, T, H) inputs, scaling hidden and cell state by mask[:, t] after each step.

    Returns:
        tuple: (outputs (B, T, H) read before masking, final masked (h, c)).
    """
    batch, steps, _ = inputs.shape
    if state is None:
        zeros = inputs.new_zeros(batch, cell.hidden_size)
        state = (zeros, zeros)
    h, c = state
    outputs = []
    for t in range(steps):
        h, c = cell(inputs[:, t], (h, c))
        outputs.append(h)
        m = mask[:, t].unsqueeze(-1)
        h, c = h * m, c * m
    return torch.stack(outputs, dim=1), (h, c)


class CompILEModel(nn.Module):
    """Segmentation auto-encoder over (state, action) sequences.

    Methods:
        embed_step(obs, actions):
            Layer-normalized step embeddings.
        recognition_pass(embeddings, mask):
            Masked LSTM run returning boundary / z head outputs per step.
        encode(obs, actions, lengths, ...):
            All M passes: boundary samples, z samples and the soft segmentation.
        policy_logits(obs, z):
            Action log-probabilities of the z-conditioned policy.
        termination_probs(obs, actions, masks):
            (B, M, T) per-pass termination probabilities.
    """

    def __init__(self, config: CompILEConfig):
        super().__init__()
        self.config = config.validate()
        H = config.hidden
        K = config.num_latents
        # recognition
        self.embedder = StepEmbedder(config)
        self.rnn = nn.LSTMCell(H, H)
        self.boundary_head = nn.Sequential(nn.Linear(H, H), nn.ReLU(), nn.Linear(H, 1))
        self.z_head = nn.Linear(H, K if config.categorical else 2 * config.z_dim)
        self.attention_head = nn.Linear(H, 1) if config.readout == Readout.ATTENTIVE else None
        # decoder
        self.policy_encoder = make_state_encoder(config)
        if config.categorical:
            self.policy_heads = nn.ModuleList(
                mlp(H, H, config.num_actions, config.policy_layers) for _ in range(K)
            )
        else:
            self.z_project = nn.Linear(config.z_dim, H)
            self.policy_heads = nn.ModuleList([mlp(2 * H, H, config.num_actions, config.policy_layers)])
        # termination
        self.term_embedder = StepEmbedder(config)
        self.term_rnn = nn.LSTMCell(H, H)
        self.term_head = mlp(H, H, 1, 2)

    # ------------------------------------------------------------------
    # recognition
    # ------------------------------------------------------------------
    def embed_step(self, obs: torch.Tensor, actions: torch.Tensor) -> torch.Tensor:
        return self.embedder(obs, actions)

    def recognition_pass(self, embeddings: torch.Tensor, mask: torch.Tensor) -> RecognitionOutput:
        """Masked recognition RNN over (B, T, H) embeddings with a (B, T) mask row."""
        hidden, _ = masked_lstm(self.rnn, embeddings, mask)
        scores = self.attention_head(hidden).squeeze(-1) if self.attention_head is not None else None
        return RecognitionOutput(self.boundary_head(hidden).squeeze(-1), self.z_head(hidden), scores)

    def encode(
        self,
        obs: torch.Tensor,
        actions: torch.Tensor,
        lengths: torch.Tensor,
        mode: SampleMode = SampleMode.RELAXED,
        temperature: Optional[float] = None,
        generator: Optional[torch.Generator] = None,
        forced_boundaries: Optional[torch.Tensor] = None,
        forced_z: Optional[torch.Tensor] = None,
        num_segments: Optional[int] = None,
    ) -> Encoding:
        """Run all recognition passes.

        Args:
            obs (torch.Tensor): (B, T, *obs_shape) observations.
            actions (torch.Tensor): (B, T) action ids.
            lengths (torch.Tensor): (B,) unpadded lengths.
            mode (SampleMode): Sampling mode for boundaries and codes.
            temperature (float, optional): Overrides the config temperature.
            generator (torch.Generator, optional): Noise source.
            forced_boundaries (torch.Tensor, optional): (B, M-1) ground-truth b_i used as
                one-hot samples (teacher forcing).
            forced_z (torch.Tensor, optional): (B, M) ground-truth codes used as one-hot samples.
            num_segments (int, optional): Overrides M (parameters are shared across passes).

        Returns:
            Encoding: Inferred latents and the soft segmentation.
        """
        cfg = self.config
        M = num_segments or cfg.num_segments
        tau = cfg.temperature if temperature is None else temperature
        mode = SampleMode(mode)
        b_mode = SampleMode.PROBS if (mode == SampleMode.RELAXED and not cfg.sample_boundaries) else mode
        batch, width = actions.shape
        lengths = lengths.to(actions.device)
        valid = (torch.arange(width, device=actions.device) < lengths.unsqueeze(-1)).to(obs.dtype)
        legal = legal_slots(lengths, width)

        embeddings = self.embed_step(obs, actions)
        mask = torch.ones_like(valid)
        b_logits, b_samples, z_params, z_samples, segprobs, masks = [], [], [], [], [], []
        for i in range(M):
            rec = self.recognition_pass(embeddings, mask)
            masks.append(mask)
            if i < M - 1:
                logits = boundary_slot_logits(rec.boundary_logits, legal)
                if forced_boundaries is not None:
                    y = F.one_hot(forced_boundaries[:, i].long() - 1, width + 1).to(obs.dtype)
                else:
                    y = gumbel_softmax(logits, tau, b_mode, generator, support=legal)
                b_logits.append(logits)
                b_samples.append(y)
                prob, next_mask = next_segment(mask, boundary_cdf(y, width))
            else:
                y = end_of_sequence_slots(lengths, width, obs.dtype)
                prob, next_mask = next_segment(mask, None)
            prob = prob * valid
            segprobs.append(prob)
            params, z = readout_z(
                rec.z_logits, y, tau, mode,
                scores=rec.attention_scores, segprobs=prob,
                gaussian=not cfg.categorical, generator=generator,
            )
            if forced_z is not None:
                z = F.one_hot(forced_z[:, i].long(), cfg.num_latents).to(obs.dtype)
            z_params.append(params)
            z_samples.append(z)
            mask = next_mask

        empty = obs.new_zeros(batch, 0, width + 1)
        samples = torch.stack(b_samples, dim=1) if b_samples else empty
        segmentation = SoftSegmentation(torch.stack(segprobs, dim=1), torch.stack(masks, dim=1), samples)
        return Encoding(
            embeddings=embeddings,
            boundary_logits=torch.stack(b_logits, dim=1) if b_logits else empty,
            boundary_samples=samples,
            z_params=torch.stack(z_params, dim=1),
            z_samples=torch.stack(z_samples, dim=1),
            segmentation=segmentation,
            valid=valid,
        )

    # ------------------------------------------------------------------
    # decoder
    # ------------------------------------------------------------------
    def head_log_probs(self, obs: torch.Tensor) -> torch.Tensor:
        """(…, K, A) log-probabilities of every categorical policy head."""
        state = self.policy_encoder(obs)
        return torch.stack([F.log_softmax(head(state), dim=-1) for head in self.policy_heads], dim=-2)

    def policy_logits(self, obs: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        """Action log-probabilities log sum_k z[k] pi_k(a|s) (categorical) or of the z-conditioned head.

        ``z`` may omit the time dimension of ``obs``; it is broadcast over steps.
        """
        lead = obs.shape[: obs.dim() - len(self.config.obs_shape)]
        while z.dim() - 1 < len(lead):
            z = z.unsqueeze(-2)
        if self.config.categorical:
            log_heads = self.head_log_probs(obs)
            log_z = torch.log(z.clamp_min(LOG_FLOOR)).unsqueeze(-1)
            return torch.logsumexp(log_z + log_heads, dim=-2)
        state = self.policy_encoder(obs)
        zp = self.z_project(z).expand(state.shape[:-1] + (-1,))
        return F.log_softmax(self.policy_heads[0](torch.cat([state, zp], dim=-1)), dim=-1)

    # ------------------------------------------------------------------
    # termination
    # ------------------------------------------------------------------
    def termination_probs(self, obs: torch.Tensor, actions: torch.Tensor, masks: torch.Tensor) -> torch.Tensor:
        """(B, M, T) sigmoid termination outputs, one masked causal pass per segment mask."""
        embeddings = self.term_embedder(obs, actions)
        rows = []
        for i in range(masks.shape[1]):
            hidden, _ = masked_lstm(self.term_rnn, embeddings, masks[:, i])
            rows.append(torch.sigmoid(self.term_head(hidden).squeeze(-1)))
        return torch.stack(rows, dim=1)

    def termination_step(
        self,
        obs: torch.Tensor,
        action: torch.Tensor,
        state: Optional[Tuple[torch.Tensor, torch.Tensor]] = None,
    ):
        """One online termination update for (B, *obs_shape) / (B,) inputs.

        Returns:
            tuple: ((B,) termination probabilities, new recurrent state).
        """
        embedding = self.term_embedder(obs, action)
        if state is None:
            zeros = embedding.new_zeros(embedding.shape[0], self.term_rnn.hidden_size)
            state = (zeros, zeros)
        h, c = self.term_rnn(embedding, state)
        return torch.sigmoid(self.term_head(h).squeeze(-1)), (h, c)


def hard_masks(boundaries: torch.Tensor, lengths: torch.Tensor, width: int, num_segments: int, dtype=torch.float32):
    """0/1 segmentation (segprobs, masks) of shape (B, M, T) for integer boundaries (B, M-1)."""
    valid = (torch.arange(width, device=lengths.device) < lengths.unsqueeze(-1)).to(dtype)
    if num_segments <= 1:
        seg = valid.unsqueeze(1)
        return seg, torch.ones_like(seg)
    y = F.one_hot(boundaries.long() - 1, width + 1).to(dtype)
    soft = segment_probs_and_masks(y, width, valid)
    return soft.segprobs, soft.masks
