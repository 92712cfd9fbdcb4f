"""
Priors and KL terms of the CompILE objective.

The boundary prior is a Poisson distribution over segment lengths truncated to the
legal support: for b_1 the length d = b_1 - 1 ranges over 1..T.
"""

import logging
from typing import Tuple

import numpy as np
import torch
import torch.nn.functional as F
from scipy.stats import poisson

logger = logging.getLogger(__name__)


def truncated_poisson(rate: float, support: int) -> np.ndarray:
    """p(d) proportional to rate^d / d! for d = 1..support, normalized.

    Args:
        rate (float): Poisson rate lambda > 0.
        support (int): D >= 1.

    Returns:
        np.ndarray: Probabilities of d = 1..D.

    Raises:
        ValueError: On a non-positive rate or support.
    """
    if rate <= 0 or support < 1:
        raise ValueError(f"truncated_poisson needs rate > 0 and support >= 1, got ({rate}, {support})")
    log_pmf = poisson.logpmf(np.arange(1, support + 1), rate)
    log_pmf -= log_pmf.max()
    pmf = np.exp(log_pmf)
    return pmf / pmf.sum()


def log_boundary_prior(rate: float, legal: torch.Tensor) -> torch.Tensor:
    """(B, T+1) log truncated-Poisson prior over boundary slots (slot j <-> d = j).

    Illegal slots receive -inf.
    """
    slots = torch.arange(legal.shape[-1], dtype=torch.float64, device=legal.device)
    log_unnorm = slots * np.log(rate) - torch.lgamma(slots + 1.0)
    log_unnorm = log_unnorm.expand(legal.shape).masked_fill(~legal, float("-inf"))
    return torch.log_softmax(log_unnorm, dim=-1)


def kl_categorical_uniform(logits: torch.Tensor) -> torch.Tensor:
    """sum_k q(k) log(K q(k)) over the last dimension, q = softmax(logits)."""
    log_q = F.log_softmax(logits, dim=-1)
    return (log_q.exp() * (log_q + np.log(logits.shape[-1]))).sum(-1)


def kl_boundary(logits: torch.Tensor, legal: torch.Tensor, rate: float) -> torch.Tensor:
    """KL(q(b) || truncated Poisson) per sequence for (B, T+1) slot logits."""
    log_q = F.log_softmax(logits, dim=-1)
    log_p = log_boundary_prior(rate, legal).to(logits.dtype)
    log_p = torch.where(legal, log_p, torch.zeros_like(log_p))
    terms = log_q.exp() * (log_q - log_p)
    return torch.where(legal, terms, torch.zeros_like(terms)).sum(-1)


def kl_gaussian(params: torch.Tensor) -> torch.Tensor:
    """KL(N(mean, exp(logvar)) || N(0, I)) for mean ++ log-variance parameters."""
    mean, logvar = params.chunk(2, dim=-1)
    return -0.5 * (1.0 + logvar - mean.pow(2) - logvar.exp()).sum(-1)


def kl_terms(encoding, config, legal: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Per-sequence (KL_z, KL_b) of an encoding.

    KL_z sums the per-segment KL of q(z_i) to its prior (uniform categorical or
    standard normal). KL_b is M times the KL of the first boundary posterior to
    the truncated Poisson prior, zero when M = 1.
    """
    if config.categorical:
        kl_z = kl_categorical_uniform(encoding.z_params).sum(-1)
    else:
        kl_z = kl_gaussian(encoding.z_params).sum(-1)
    num_segments = encoding.z_params.shape[1]
    if num_segments < 2:
        return kl_z, torch.zeros_like(kl_z)
    kl_b = num_segments * kl_boundary(encoding.boundary_logits[:, 0], legal, config.poisson_rate)
    return kl_z, kl_b
