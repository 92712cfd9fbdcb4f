"""
Relaxed segmentation primitives: Gumbel-softmax sampling, boundary sampling, soft
segment masks and z readout.

Boundary distributions live on T+1 slots per sequence. Slot j encodes the boundary
b = j + 1, the 1-based first step of the following segment; slot 0 (b = 1) is never
legal and slot T (b = T + 1) closes the sequence. The soft CDF of boundary i at
0-based step s is F_i(s) = sum_{j <= s} y_i[j].
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import torch
import torch.nn.functional as F

from ..constants import GUMBEL_EPS, ILLEGAL_LOGIT, LOG_FLOOR
from .config import SampleMode

logger = logging.getLogger(__name__)


@dataclass
class SoftSegmentation:
    """Soft segment occupancy.

    Attributes:
        segprobs (torch.Tensor): (..., M, T) probabilities P(t in C_i).
        masks (torch.Tensor): (..., M, T) RNN state masks.
        samples (torch.Tensor): (..., M-1, T+1) boundary samples in slot space.
    """

    segprobs: torch.Tensor
    masks: torch.Tensor
    samples: torch.Tensor


def sample_gumbel(shape, generator: Optional[torch.Generator] = None, dtype=torch.float32, device=None) -> torch.Tensor:
    u = torch.rand(shape, generator=generator, dtype=dtype, device=device)
    return -torch.log(-torch.log(u + GUMBEL_EPS) + GUMBEL_EPS)


def support_gumbel(support: torch.Tensor, generator: Optional[torch.Generator] = None, dtype=torch.float32) -> torch.Tensor:
    """Gumbel noise on the True entries of ``support`` only, filled in row-major order.

    Entries outside the support get zero noise and consume nothing from ``generator``,
    so the noise on a row's real slots does not depend on how far the batch is padded.
    """
    noise = torch.zeros(support.shape, dtype=dtype, device=support.device)
    noise[support] = sample_gumbel((int(support.sum()),), generator, dtype, support.device)
    return noise


def gumbel_softmax(
    logits: torch.Tensor,
    temperature: float,
    mode: SampleMode = SampleMode.RELAXED,
    generator: Optional[torch.Generator] = None,
    support: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Draw a (relaxed) one-hot sample over the last dimension.

    Args:
        logits (torch.Tensor): Unnormalized log-probabilities.
        temperature (float): Relaxation temperature tau > 0.
        mode (SampleMode): RELAXED (concrete sample), PROBS (softmax), HARD
            (Gumbel-max one-hot) or ARGMAX (one-hot of the largest logit).
        generator (torch.Generator, optional): Noise source.
        support (torch.Tensor, optional): Bool mask shaped like ``logits``; noise is drawn
            for these entries only.

    Returns:
        torch.Tensor: Sample with the shape of ``logits``.
    """
    mode = SampleMode(mode)
    if mode == SampleMode.PROBS:
        return F.softmax(logits, dim=-1)
    if mode == SampleMode.ARGMAX:
        return one_hot_argmax(logits)
    if support is None:
        noise = sample_gumbel(logits.shape, generator, logits.dtype, logits.device)
    else:
        noise = support_gumbel(support, generator, logits.dtype)
    noisy = logits + noise
    if mode == SampleMode.HARD:
        return one_hot_argmax(noisy)
    return F.softmax(noisy / temperature, dim=-1)


def one_hot_argmax(logits: torch.Tensor) -> torch.Tensor:
    """One-hot of the first maximal entry."""
    index = torch.argmax(logits, dim=-1)
    return F.one_hot(index, logits.shape[-1]).to(logits.dtype)


def legal_slots(lengths: torch.Tensor, width: int) -> torch.Tensor:
    """(B, width+1) bool: slot j is legal iff 1 <= j <= length."""
    slots = torch.arange(width + 1, device=lengths.device)
    return (slots >= 1) & (slots <= lengths.unsqueeze(-1))


def boundary_slot_logits(step_logits: torch.Tensor, legal: torch.Tensor) -> torch.Tensor:
    """Map per-step boundary head outputs (B, T) to slot logits (B, T+1).

    Slot j >= 1 takes the head output of 1-based step j, the last step of the
    segment it would close; illegal slots get ILLEGAL_LOGIT.
    """
    pad = step_logits.new_full(step_logits.shape[:-1] + (1,), ILLEGAL_LOGIT)
    slots = torch.cat([pad, step_logits], dim=-1)
    return slots.masked_fill(~legal, ILLEGAL_LOGIT)


def sample_boundary(
    logits: torch.Tensor,
    legal: torch.Tensor,
    temperature: float,
    mode: SampleMode = SampleMode.RELAXED,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """Sample a relaxed one-hot boundary over slots, illegal slots masked out.

    Raises:
        ValueError: If some row has no legal slot.
    """
    if not bool(legal.any(dim=-1).all()):
        raise ValueError("every boundary position is illegal")
    masked = logits.masked_fill(~legal, ILLEGAL_LOGIT)
    return gumbel_softmax(masked, temperature, mode, generator, support=legal)


def boundary_cdf(y: torch.Tensor, num_steps: int) -> torch.Tensor:
    """F(s) for 0-based steps s < num_steps from slot-space samples."""
    return torch.cumsum(y, dim=-1)[..., :num_steps]


def next_segment(prev_mask: torch.Tensor, cdf: Optional[torch.Tensor]):
    """One pass of the segment recursion.

    Args:
        prev_mask (torch.Tensor): mask_i, product of the earlier CDFs.
        cdf (torch.Tensor, optional): F_i of this pass's boundary; None for pass M.

    Returns:
        tuple: (segprobs_i, mask_{i+1}).
    """
    if cdf is None:
        return prev_mask, torch.zeros_like(prev_mask)
    return prev_mask * (1.0 - cdf), prev_mask * cdf


def segment_probs_and_masks(
    samples: Union[torch.Tensor, Sequence[torch.Tensor]],
    num_steps: int,
    valid: Optional[torch.Tensor] = None,
) -> SoftSegmentation:
    """Soft segment probabilities and RNN masks from M-1 boundary samples.

    Args:
        samples: (..., M-1, >=T slots) tensor, or a sequence of (..., slots) tensors.
        num_steps (int): T.
        valid (torch.Tensor, optional): (..., T) 1 on unpadded steps; segprobs are
            zeroed on padded steps.

    Returns:
        SoftSegmentation: segprobs and masks of shape (..., M, T).
    """
    if not isinstance(samples, torch.Tensor):
        samples = torch.stack(list(samples), dim=-2)
    cdfs = boundary_cdf(samples, num_steps)
    mask = torch.ones(cdfs.shape[:-2] + (num_steps,), dtype=cdfs.dtype, device=cdfs.device)
    segprobs, masks = [], []
    for i in range(cdfs.shape[-2] + 1):
        masks.append(mask)
        prob, mask = next_segment(mask, cdfs[..., i, :] if i < cdfs.shape[-2] else None)
        segprobs.append(prob)
    segprobs = torch.stack(segprobs, dim=-2)
    if valid is not None:
        segprobs = segprobs * valid.unsqueeze(-2).to(segprobs.dtype)
    return SoftSegmentation(segprobs=segprobs, masks=torch.stack(masks, dim=-2), samples=samples)


def end_of_sequence_slots(lengths: torch.Tensor, width: int, dtype=torch.float32) -> torch.Tensor:
    """One-hot at slot T_b (b = T_b + 1), the implicit boundary of the last segment."""
    return F.one_hot(lengths.long(), width + 1).to(dtype)


def readout_weights(y: torch.Tensor, num_steps: int) -> torch.Tensor:
    """Step-aligned readout weights w[s] = y[s + 1]: the last step of the segment."""
    return y[..., 1:num_steps + 1]


def attentive_weights(scores: torch.Tensor, segprobs: torch.Tensor) -> torch.Tensor:
    """Softmax over time of attention scores masked by log segment probabilities."""
    return F.softmax(scores + torch.log(segprobs.clamp_min(LOG_FLOOR)), dim=-1)


def readout_z(
    h_z: torch.Tensor,
    y: torch.Tensor,
    temperature: float,
    mode: SampleMode = SampleMode.RELAXED,
    scores: Optional[torch.Tensor] = None,
    segprobs: Optional[torch.Tensor] = None,
    gaussian: bool = False,
    generator: Optional[torch.Generator] = None,
):
    """Read a segment's posterior parameters from per-step head outputs and sample z.

    Args:
        h_z (torch.Tensor): (B, T, D) z head outputs (logits, or mean ++ log-variance).
        y (torch.Tensor): (B, T+1) slot-space boundary sample closing the segment.
        temperature (float): Gumbel-softmax temperature.
        mode (SampleMode): Sampling mode.
        scores (torch.Tensor, optional): (B, T) attention scores; selects attentive readout.
        segprobs (torch.Tensor, optional): (B, T) this segment's soft occupancy (attentive).
        gaussian (bool): Treat ``h_z`` as mean ++ log-variance.
        generator (torch.Generator, optional): Noise source.

    Returns:
        tuple: (posterior parameters (B, D), sample (B, K or D/2)).
    """
    if scores is not None:
        weights = attentive_weights(scores, segprobs)
    else:
        weights = readout_weights(y, h_z.shape[-2])
    params = torch.einsum("bt,btd->bd", weights, h_z)
    mode = SampleMode(mode)
    if not gaussian:
        return params, gumbel_softmax(params, temperature, mode, generator)
    mean, logvar = params.chunk(2, dim=-1)
    if mode in (SampleMode.PROBS, SampleMode.ARGMAX):
        return params, mean
    eps = torch.randn(mean.shape, generator=generator, dtype=mean.dtype, device=mean.device)
    return params, mean + torch.exp(0.5 * logvar) * eps
