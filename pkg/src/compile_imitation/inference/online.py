"""
Online execution: infer codes from a demonstration, then act in a fresh copy of the
demonstrated instance with the decoded sub-policies, switching codes when the
termination network fires.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import torch

from ..constants import TERMINATION_THRESHOLD
from ..data.schemas import EpisodeRecord
from ..envs.factory import EnvAdapter, get_adapter
from ..models.compile_model import CompILEModel
from .segment import segment_record

logger = logging.getLogger(__name__)

SUCCESS_REWARD = 100.0


@dataclass
class OnlineRollout:
    """Trace of one online episode.

    Attributes:
        reward (float): 100 if every task was completed, else 0.
        steps (int): Environment steps taken.
        switches (list): Steps after which the active code advanced.
        actions (list): Action ids taken.
        outcome (str): "solved", "failed" or "timeout".
    """

    reward: float
    steps: int = 0
    switches: List[int] = field(default_factory=list)
    actions: List[int] = field(default_factory=list)
    outcome: str = "timeout"


def rollout_online(
    model: CompILEModel,
    record: EpisodeRecord,
    adapter: Optional[EnvAdapter] = None,
    num_segments: Optional[int] = None,
    use_termination: bool = True,
    step_limit: Optional[int] = None,
) -> OnlineRollout:
    """Run the decoded policies on the record's instance.

    Termination is evaluated after each transition on the (s_t, a_t) pair just
    executed; a probability above 0.5 moves to the next code and resets the
    termination RNN. The last code keeps acting until the episode ends.

    Args:
        model (CompILEModel): Trained model.
        record (EpisodeRecord): Demonstration whose instance and codes are used.
        adapter (EnvAdapter, optional): Defaults to the record's environment.
        num_segments (int, optional): Number of codes to infer.
        use_termination (bool): False runs the first code to the end of the episode.
        step_limit (int, optional): Defaults to the adapter's limit.

    Returns:
        OnlineRollout: Reward and trace.
    """
    adapter = adapter or get_adapter(record.env)
    limit = step_limit or adapter.step_limit
    state = adapter.initial_state(record)
    if state.done:
        return OnlineRollout(reward=SUCCESS_REWARD, outcome="solved")

    segmentation = segment_record(model, record, num_segments)
    codes = segmentation.z
    dtype = next(model.parameters()).dtype
    result = OnlineRollout(reward=0.0)
    active = 0
    term_state = None
    with torch.no_grad():
        while result.steps < limit:
            obs = torch.as_tensor(adapter.observe(state), dtype=dtype).unsqueeze(0)
            action = int(torch.argmax(model.policy_logits(obs, codes[active].unsqueeze(0)), dim=-1))
            state, event = adapter.step(state, action)
            result.steps += 1
            result.actions.append(action)
            if adapter.is_failure(event):
                result.outcome = "failed"
                break
            if state.done:
                result.reward = SUCCESS_REWARD
                result.outcome = "solved"
                break
            if not use_termination:
                continue
            prob, term_state = model.termination_step(obs, torch.tensor([action]), term_state)
            if float(prob) > TERMINATION_THRESHOLD and active < codes.shape[0] - 1:
                active += 1
                term_state = None
                result.switches.append(result.steps)
    logger.debug(f"online episode seed={record.seed}: {result.outcome} after {result.steps} steps")
    return result


def execute_online(
    model: CompILEModel,
    record: EpisodeRecord,
    adapter: Optional[EnvAdapter] = None,
    num_segments: Optional[int] = None,
) -> float:
    """Online reward in {0, 100} for one demonstration."""
    return rollout_online(model, record, adapter, num_segments).reward
