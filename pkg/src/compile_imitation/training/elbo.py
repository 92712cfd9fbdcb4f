"""
CompILE objective: masked reconstruction, beta-scaled KL terms, optional supervision
and the termination network's BCE.

Sign convention: ``LossReport.total`` is minimized. Reconstruction and KL terms are
divided by the batch's mean sequence length, so padding never changes a loss term.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import torch
import torch.nn.functional as F

from ..constants import LOG_FLOOR
from ..data.dataset import Batch
from ..models.compile_model import CompILEModel, Encoding, hard_masks
from ..models.config import CompILEConfig, SampleMode, Supervision
from ..models.segmentation import legal_slots
from ..utils.error_helpers import ConfigError
from .priors import kl_terms

logger = logging.getLogger(__name__)

BCE_EPS = 1e-7


@dataclass
class LossReport:
    """Components of one loss evaluation.

    Attributes:
        total (torch.Tensor): Scalar minimized by training.
        recon (torch.Tensor): -(sum_i L_i) / T_avg, batch mean.
        recon_terms (torch.Tensor): (M,) batch-mean L_i.
        kl_z (torch.Tensor): Batch-mean KL_z (unscaled).
        kl_b (torch.Tensor): Batch-mean KL_b (unscaled).
        sup_z (torch.Tensor): z-supervision cross-entropy (0 if unused).
        sup_b (torch.Tensor): b-supervision cross-entropy (0 if unused).
        term_bce (torch.Tensor): Termination BCE per unpadded step.
        elbo (torch.Tensor): (B,) single-sample estimate sum_i L_i - beta (KL_z + KL_b).
    """

    total: torch.Tensor
    recon: torch.Tensor
    recon_terms: torch.Tensor
    kl_z: torch.Tensor
    kl_b: torch.Tensor
    sup_z: torch.Tensor
    sup_b: torch.Tensor
    term_bce: torch.Tensor
    elbo: torch.Tensor

    def as_row(self) -> Dict[str, float]:
        """Loss-curve columns as floats."""
        return {
            "total": float(self.total),
            "recon": float(self.recon),
            "kl_z": float(self.kl_z),
            "kl_b": float(self.kl_b),
            "term_bce": float(self.term_bce),
            "sup": float(self.sup_z + self.sup_b),
        }


def action_log_probs(model: CompILEModel, obs: torch.Tensor, actions: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
    """(B, M, T) log pi(a_t | s_t, z_i) for every segment code."""
    index = actions.long().unsqueeze(-1)
    if model.config.categorical:
        log_heads = model.head_log_probs(obs)
        rows = []
        for i in range(z.shape[1]):
            log_z = torch.log(z[:, i].clamp_min(LOG_FLOOR))[:, None, :, None]
            rows.append(torch.logsumexp(log_z + log_heads, dim=-2).gather(-1, index).squeeze(-1))
        return torch.stack(rows, dim=1)
    return torch.stack(
        [model.policy_logits(obs, z[:, i]).gather(-1, index).squeeze(-1) for i in range(z.shape[1])], dim=1
    )


def termination_targets(boundaries: torch.Tensor, lengths: torch.Tensor, width: int, num_segments: int, dtype):
    """Hard segment occupancy and termination targets, both (B, M, T).

    The target of pass i is 1 at step b_i - 1 (1-based, b_M = T + 1) inside segment i.
    """
    seg, masks = hard_masks(boundaries, lengths, width, num_segments, dtype)
    ends = torch.cat([boundaries.long() - 2, lengths.long().unsqueeze(-1) - 1], dim=1).clamp(0, max(width - 1, 0))
    targets = seg * F.one_hot(ends, width).to(dtype)
    return seg, masks, targets


def elbo_loss(
    batch: Batch,
    model: CompILEModel,
    config: Optional[CompILEConfig] = None,
    seed: Optional[int] = None,
    generator: Optional[torch.Generator] = None,
    hard_samples: bool = False,
    mode: SampleMode = SampleMode.RELAXED,
    temperature: Optional[float] = None,
    num_segments: Optional[int] = None,
) -> LossReport:
    """Evaluate the CompILE loss on a batch.

    Args:
        batch (Batch): Padded batch from one environment.
        model (CompILEModel): Model to evaluate.
        config (CompILEConfig, optional): Defaults to ``model.config``.
        seed (int, optional): Seeds a fresh noise generator (ignored if ``generator`` is given).
        generator (torch.Generator, optional): Noise source.
        hard_samples (bool): Use exact categorical samples (Gumbel-max) so ``elbo`` is a
            valid stochastic lower bound.
        mode (SampleMode): Sampling mode when ``hard_samples`` is False.
        temperature (float, optional): Overrides the config temperature.
        num_segments (int, optional): Overrides M.

    Returns:
        LossReport: Loss components.

    Raises:
        ConfigError: On env mismatch or supervision without matching ground truth.
    """
    config = config or model.config
    if batch.env != config.env:
        raise ConfigError(f"batch env '{batch.env}' does not match model env '{config.env}'")
    M = num_segments or config.num_segments
    if generator is None and seed is not None:
        generator = torch.Generator().manual_seed(int(seed))
    dtype = next(model.parameters()).dtype
    t = batch.tensors(dtype)
    obs, actions, lengths = t["states"], t["actions"], t["lengths"]
    width = actions.shape[1]

    forced_b = forced_z = None
    if config.supervision == Supervision.B:
        if t["boundaries"] is None or t["boundaries"].shape[1] != M - 1:
            raise ConfigError(f"b supervision needs {M - 1} ground-truth boundaries per episode")
        forced_b = t["boundaries"]
    elif config.supervision == Supervision.Z:
        if t["task_types"] is None or t["task_types"].shape[1] != M:
            raise ConfigError(f"z supervision needs {M} ground-truth task types per episode")
        if int(t["task_types"].max()) >= config.num_latents:
            raise ConfigError(f"task types exceed num_latents={config.num_latents}")
        forced_z = t["task_types"]

    mode = SampleMode.HARD if hard_samples else SampleMode(mode)
    enc: Encoding = model.encode(
        obs, actions, lengths, mode=mode, temperature=temperature, generator=generator,
        forced_boundaries=forced_b, forced_z=forced_z, num_segments=M,
    )
    legal = legal_slots(lengths, width)

    logp = action_log_probs(model, obs, actions, enc.z_samples)
    recon_terms = (enc.segmentation.segprobs * logp).sum(-1)
    t_avg = lengths.to(dtype).mean()
    kl_z, kl_b = kl_terms(enc, config, legal)
    recon = -recon_terms.sum(1).mean() / t_avg
    kl = config.beta * (kl_z + kl_b).mean() / t_avg

    zero = recon.new_zeros(())
    sup_b = sup_z = zero
    if forced_b is not None and M > 1:
        log_q_b = F.log_softmax(enc.boundary_logits, dim=-1)
        sup_b = -log_q_b.gather(-1, (forced_b.long() - 1).unsqueeze(-1)).mean()
    if forced_z is not None:
        log_q_z = F.log_softmax(enc.z_params, dim=-1)
        sup_z = -log_q_z.gather(-1, forced_z.long().unsqueeze(-1)).mean()

    with torch.no_grad():
        if forced_b is not None:
            positions = forced_b
        else:
            positions = enc.boundary_logits.argmax(-1) + 1
    seg, masks, targets = termination_targets(positions, lengths, width, M, dtype)
    probs = model.termination_probs(obs, actions, masks).clamp(BCE_EPS, 1.0 - BCE_EPS)
    term_bce = F.binary_cross_entropy(probs, targets, weight=seg, reduction="sum") / enc.valid.sum()

    total = recon + kl + sup_b + sup_z + config.termination_weight * term_bce
    return LossReport(
        total=total,
        recon=recon,
        recon_terms=recon_terms.mean(0),
        kl_z=kl_z.mean(),
        kl_b=kl_b.mean(),
        sup_z=sup_z,
        sup_b=sup_b,
        term_bce=term_bce,
        elbo=recon_terms.sum(1) - config.beta * (kl_z + kl_b),
    )
