"""
Discrete test-time segmentation and teacher-forced action reconstruction.

Inference replaces every relaxed sample with an argmax (ties go to the smallest
index) and every soft mask with a hard one, so outputs do not depend on the
training temperature.
"""

import logging
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import torch
import torch.nn.functional as F

from ..data.dataset import episode_observations
from ..data.schemas import EpisodeRecord
from ..envs.factory import get_adapter
from ..models.compile_model import CompILEModel
from ..models.config import SampleMode
from ..models.segmentation import (
    boundary_cdf,
    boundary_slot_logits,
    end_of_sequence_slots,
    legal_slots,
    next_segment,
    readout_z,
)

logger = logging.getLogger(__name__)


class DiscreteSegmentation(NamedTuple):
    """Hard segmentation of one trajectory.

    Attributes:
        boundaries (list): b_1..b_{M-1}, 1-based first steps of segments 2..M.
        codes (list): Argmax code per segment (None entries for Gaussian latents).
        z (torch.Tensor): (M, D) codes as one-hot rows, or Gaussian posterior means.
    """

    boundaries: List[int]
    codes: List[Optional[int]]
    z: torch.Tensor


def _model_dtype(model: torch.nn.Module) -> torch.dtype:
    return next(model.parameters()).dtype


def _as_tensors(model, obs, actions):
    dtype = _model_dtype(model)
    obs = torch.as_tensor(np.asarray(obs) if not torch.is_tensor(obs) else obs, dtype=dtype)
    actions = torch.as_tensor(actions, dtype=torch.long)
    return obs, actions


def segment_discrete(
    model: CompILEModel,
    obs: Union[np.ndarray, torch.Tensor],
    actions: Union[Sequence[int], torch.Tensor],
    num_segments: Optional[int] = None,
) -> DiscreteSegmentation:
    """Segment one trajectory with hard masks.

    Pass i runs the recognition RNN with every step before b_{i-1} masked out and picks
    b_i as the first maximal boundary slot in (b_{i-1}, T + 1 - (M - 1 - i)], leaving room
    for the remaining boundaries. z_i is read at step b_i - 1.

    Args:
        model (CompILEModel): Trained model.
        obs (array-like): (T, *obs_shape) observations.
        actions (array-like): (T,) action ids.
        num_segments (int, optional): M, defaults to the model's.

    Returns:
        DiscreteSegmentation: Boundaries, codes and code vectors.

    Raises:
        ValueError: If the trajectory is empty.
    """
    M = num_segments or model.config.num_segments
    obs, actions = _as_tensors(model, obs, actions)
    T = int(actions.shape[0])
    if T < 1:
        raise ValueError("cannot segment an empty trajectory")
    if T < M - 1:
        logger.warning(f"trajectory of length {T} cannot hold {M - 1} distinct boundaries; trailing segments are empty")
    categorical = model.config.categorical
    lengths = torch.tensor([T])
    legal = legal_slots(lengths, T)

    boundaries: List[int] = []
    codes: List[Optional[int]] = []
    z_rows = []
    with torch.no_grad():
        embeddings = model.embed_step(obs.unsqueeze(0), actions.unsqueeze(0))
        mask = embeddings.new_ones(1, T)
        previous = 1
        for i in range(M):
            rec = model.recognition_pass(embeddings, mask)
            if i < M - 1:
                slots = boundary_slot_logits(rec.boundary_logits, legal)[0]
                lo, hi = previous, T - (M - 2 - i)
                if hi < lo:
                    b = T + 1
                else:
                    b = lo + int(torch.argmax(slots[lo:hi + 1])) + 1
                y = F.one_hot(torch.tensor([b - 1]), T + 1).to(embeddings.dtype)
                prob, next_mask = next_segment(mask, boundary_cdf(y, T))
                boundaries.append(b)
                previous = b
            else:
                y = end_of_sequence_slots(lengths, T, embeddings.dtype)
                prob, next_mask = next_segment(mask, None)
            params, z = readout_z(
                rec.z_logits, y, 1.0, SampleMode.ARGMAX,
                scores=rec.attention_scores, segprobs=prob, gaussian=not categorical,
            )
            codes.append(int(torch.argmax(params[0])) if categorical else None)
            z_rows.append(z[0])
            mask = next_mask
    return DiscreteSegmentation(boundaries=boundaries, codes=codes, z=torch.stack(z_rows))


def record_tensors(record: EpisodeRecord):
    """(observations, action ids) of a record as model inputs."""
    adapter = get_adapter(record.env)
    return episode_observations(record), adapter.action_ids(record)


def segment_record(model: CompILEModel, record: EpisodeRecord, num_segments: Optional[int] = None) -> DiscreteSegmentation:
    obs, actions = record_tensors(record)
    return segment_discrete(model, obs, actions, num_segments)


def segment_ids(boundaries: Sequence[int], num_steps: int) -> np.ndarray:
    """0-based segment index of every step: the number of boundaries <= the 1-based step."""
    steps = np.arange(1, num_steps + 1)
    return np.searchsorted(np.asarray(sorted(boundaries), dtype=np.int64), steps, side="right")


def reconstruct_actions(
    model: CompILEModel,
    obs: Union[np.ndarray, torch.Tensor],
    boundaries: Sequence[int],
    codes: Union[torch.Tensor, Sequence[int]],
) -> np.ndarray:
    """Teacher-forced argmax actions: step t of segment i gets argmax pi(a | s_t, z_i).

    Args:
        model (CompILEModel): Trained model.
        obs (array-like): (T, *obs_shape) ground-truth observations.
        boundaries (list): b_1..b_{M-1}.
        codes: (M, D) code vectors, or M integer codes (categorical models only).

    Returns:
        np.ndarray: (T,) predicted action ids.
    """
    dtype = _model_dtype(model)
    obs = torch.as_tensor(np.asarray(obs) if not torch.is_tensor(obs) else obs, dtype=dtype)
    if torch.is_tensor(codes):
        z = codes.to(dtype)
    else:
        z = F.one_hot(torch.as_tensor(list(codes), dtype=torch.long), model.config.num_latents).to(dtype)
    ids = torch.as_tensor(segment_ids(boundaries, obs.shape[0]), dtype=torch.long).clamp(max=z.shape[0] - 1)
    with torch.no_grad():
        log_probs = model.policy_logits(obs, z[ids])
    return torch.argmax(log_probs, dim=-1).cpu().numpy()


def segmentation_report(segmentation: DiscreteSegmentation, num_steps: int, **extra: Any) -> Dict[str, Any]:
    """JSON-ready per-trajectory report: boundaries, codes and per-step segment ids."""
    report = {
        "boundaries": [int(b) for b in segmentation.boundaries],
        "codes": [None if c is None else int(c) for c in segmentation.codes],
        "segment_ids": [int(s) for s in segment_ids(segmentation.boundaries, num_steps)],
    }
    report.update(extra)
    return report
