"""
Segmentation and imitation metrics.

Per episode: boundary accuracy, F1 at tolerance 0 and 1, teacher-forced reconstruction
accuracy, exact match and the online reward. ``compute_metrics`` aggregates them into
a MetricsReport (mean and standard deviation over episodes).
"""

import logging
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from ..baselines.surprisal import surprisal_segment
from ..baselines.vae_bc import vae_bc_execute
from ..data.schemas import EpisodeRecord
from ..envs.factory import get_adapter
from ..inference.online import execute_online
from ..inference.segment import reconstruct_actions, record_tensors, segment_discrete
from ..models.config import ModelKind
from ..utils.error_helpers import ConfigError
from ..utils.logging import progress_enabled

logger = logging.getLogger(__name__)

METRIC_NAMES = ["boundary_accuracy", "f1_tol0", "f1_tol1", "reconstruction", "exact_match", "online_reward"]


def f1_score(predicted: Sequence[int], true: Sequence[int], tol: int = 0) -> float:
    """F1 of predicted against true boundaries with one-to-one matching.

    Predictions are visited in ascending order and each takes the smallest unmatched
    truth within ``tol``. With no predictions precision is 1, with no truths recall
    is 1, so two empty sets score 1.0.

    Args:
        predicted (list): Predicted boundary positions.
        true (list): Ground-truth boundary positions.
        tol (int): Matching tolerance (0 or 1).

    Returns:
        float: F1 in [0, 1].
    """
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    truths = sorted(true)
    used = [False] * len(truths)
    matched = 0
    for p in sorted(predicted):
        for j, t in enumerate(truths):
            if not used[j] and abs(p - t) <= tol:
                used[j] = True
                matched += 1
                break
    precision = matched / len(predicted) if predicted else 1.0
    recall = matched / len(truths) if truths else 1.0
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def boundary_accuracy(predicted: Sequence[int], true: Sequence[int]) -> float:
    """Fraction of boundaries i with predicted b_i == true b_i.

    A missing boundary on either side counts as a miss; no boundaries at all scores 1.0.
    """
    n = max(len(predicted), len(true))
    if n == 0:
        return 1.0
    hits = sum(int(p == t) for p, t in zip(predicted, true))
    return hits / n


def reconstruction_accuracy(predicted_actions: Sequence[int], true_actions: Sequence[int]) -> float:
    """Per-step match fraction of two equal-length action sequences."""
    predicted_actions = np.asarray(predicted_actions)
    true_actions = np.asarray(true_actions)
    if predicted_actions.shape != true_actions.shape:
        raise ValueError(f"action sequences differ in length: {predicted_actions.shape} vs {true_actions.shape}")
    if true_actions.size == 0:
        return 1.0
    return float(np.mean(predicted_actions == true_actions))


def exact_match(predicted_actions: Sequence[int], true_actions: Sequence[int]) -> float:
    return float(reconstruction_accuracy(predicted_actions, true_actions) == 1.0)


@dataclass
class EpisodeMetrics:
    """Metrics of one test episode (None where the model kind does not define one)."""

    index: int
    seed: int
    predicted_boundaries: List[int]
    true_boundaries: List[int]
    boundary_accuracy: float
    f1_tol0: float
    f1_tol1: float
    reconstruction: Optional[float] = None
    exact_match: Optional[float] = None
    online_reward: Optional[float] = None
    codes: List[Optional[int]] = field(default_factory=list)


@dataclass
class MetricsReport:
    """Aggregated metrics of one model on one test set.

    Attributes:
        model_kind (str): compile, surprisal or vae-bc.
        env (str): Environment tag.
        num_segments (int): M used at evaluation.
        num_tasks (int): Most common task count of the test episodes.
        episodes (list): Per-episode EpisodeMetrics.
    """

    model_kind: str
    env: str
    num_segments: int
    num_tasks: int
    episodes: List[EpisodeMetrics] = field(default_factory=list)

    def summary(self) -> Dict[str, Dict[str, float]]:
        """{metric: {"mean", "std", "n"}} over the episodes that define the metric."""
        out = {}
        for name in METRIC_NAMES:
            values = [getattr(e, name) for e in self.episodes if getattr(e, name) is not None]
            if values:
                out[name] = {"mean": float(np.mean(values)), "std": float(np.std(values)), "n": len(values)}
        return out

    def rows(self) -> List[Dict[str, Any]]:
        """One row per metric: model, env, tasks, segments, metric, mean, std, episodes."""
        return [
            {
                "model": self.model_kind,
                "env": self.env,
                "tasks": self.num_tasks,
                "segments": self.num_segments,
                "metric": name,
                "mean": stats["mean"],
                "std": stats["std"],
                "episodes": stats["n"],
            }
            for name, stats in self.summary().items()
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model_kind": self.model_kind,
            "env": self.env,
            "num_segments": self.num_segments,
            "num_tasks": self.num_tasks,
            "summary": self.summary(),
            "episodes": [asdict(e) for e in self.episodes],
        }


def episode_metrics(model, model_kind: ModelKind, record: EpisodeRecord, index: int, num_segments: int, online: bool = True) -> EpisodeMetrics:
    """Evaluate one episode."""
    kind = ModelKind(model_kind)
    obs, actions = record_tensors(record)
    true_b = list(record.boundaries)
    recon = exact = reward = None
    codes: List[Optional[int]] = []
    if kind == ModelKind.SURPRISAL:
        pred_b = surprisal_segment(model, obs, actions, num_segments)
    else:
        segments = 1 if kind == ModelKind.VAE_BC else num_segments
        seg = segment_discrete(model, obs, actions, segments)
        pred_b, codes = list(seg.boundaries), list(seg.codes)
        predicted = reconstruct_actions(model, obs, seg.boundaries, seg.z)
        recon = reconstruction_accuracy(predicted, actions)
        exact = exact_match(predicted, actions)
        if online:
            adapter = get_adapter(record.env)
            if kind == ModelKind.VAE_BC:
                reward = vae_bc_execute(model, record, adapter)
            else:
                reward = execute_online(model, record, adapter, num_segments)
    return EpisodeMetrics(
        index=index,
        seed=record.seed,
        predicted_boundaries=[int(b) for b in pred_b],
        true_boundaries=true_b,
        boundary_accuracy=boundary_accuracy(pred_b, true_b),
        f1_tol0=f1_score(pred_b, true_b, tol=0),
        f1_tol1=f1_score(pred_b, true_b, tol=1),
        reconstruction=recon,
        exact_match=exact,
        online_reward=reward,
        codes=codes,
    )


def compute_metrics(
    model,
    records: Sequence[EpisodeRecord],
    num_segments: Optional[int] = None,
    model_kind: ModelKind = ModelKind.COMPILE,
    online: bool = True,
) -> MetricsReport:
    """Evaluate a model on test episodes.

    Args:
        model: CompILEModel (compile, vae-bc) or SurprisalModel.
        records (list): Test episodes from the model's environment.
        num_segments (int, optional): M at evaluation; defaults to the model's.
        model_kind (ModelKind): Which model family ``model`` is.
        online (bool): Also run online execution (CompILE and VAE-BC only).

    Returns:
        MetricsReport: Per-episode and aggregated metrics.

    Raises:
        ConfigError: On an empty test set or records from another environment.
    """
    if not records:
        raise ConfigError("no test episodes")
    env = model.config.env
    if any(r.env != env for r in records):
        raise ConfigError(f"test episodes must all be '{env}' episodes")
    M = num_segments or model.config.num_segments
    kind = ModelKind(model_kind)
    model.eval()
    episodes = [
        episode_metrics(model, kind, record, i, M, online)
        for i, record in enumerate(tqdm(records, desc=f"eval {kind.value}", disable=not progress_enabled()))
    ]
    num_tasks = Counter(len(r.tasks) for r in records).most_common(1)[0][0]
    report = MetricsReport(model_kind=kind.value, env=env, num_segments=M, num_tasks=num_tasks, episodes=episodes)
    logger.info(f"Evaluated {len(episodes)} {env} episodes with M={M}: {report.summary()}")
    return report
