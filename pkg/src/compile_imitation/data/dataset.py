"""
Episode dataset: JSON Lines writing and loading, replay validation and padded batches.

States are never serialized. Observations are rebuilt by replaying the stored actions
from the stored layout, so a record is a seed, a layout, a task list, actions,
boundaries and a final-state digest.
"""

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import torch
from pydantic import ValidationError
from tqdm import tqdm

from ..envs.factory import get_adapter
from ..envs.grid import GridConfig
from ..envs.tasks import TaskKind
from ..utils.error_helpers import BatchError, DatasetValidationError, OutputWriteError, ReplayMismatchError, ResampleError
from ..utils.logging import progress_enabled
from ..utils.paths import ensure_parent_dir
from .schemas import RECORD_TYPES, EpisodeRecord, ReplayResult

logger = logging.getLogger(__name__)


def _generate_one(index: int, env: str, num_tasks: int, kind: str, master_seed: int, cap: int, config: Optional[GridConfig]):
    adapter = get_adapter(env)
    return adapter.generate_record(master_seed + index, num_tasks, TaskKind(kind), cap, config)


def generate_records(
    env: str,
    episodes: int,
    num_tasks: int,
    kind: str,
    master_seed: int,
    cap: int,
    config: Optional[GridConfig] = None,
    workers: int = 1,
) -> List[EpisodeRecord]:
    """Generate ``episodes`` records; episode i is seeded with ``master_seed + i``.

    Args:
        env (str): 'grid' or 'reacher'.
        episodes (int): Number of records.
        num_tasks (int): Tasks per episode.
        kind (str): visit, pickup or reach.
        master_seed (int): Seed of episode 0.
        cap (int): Maximum demonstration length.
        config (GridConfig, optional): Grid variant (ignored for the reacher).
        workers (int, optional): Process count; output does not depend on it.

    Returns:
        list: Records in episode order.
    """
    get_adapter(env)
    job = partial(_generate_one, env=env, num_tasks=num_tasks, kind=kind, master_seed=master_seed, cap=cap, config=config)
    indices = range(episodes)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(job, indices, chunksize=max(1, episodes // (4 * workers)))
            return list(tqdm(results, total=episodes, desc=f"gen {env}", disable=not progress_enabled()))
    return [job(i) for i in tqdm(indices, desc=f"gen {env}", disable=not progress_enabled())]


def record_to_line(record: EpisodeRecord) -> str:
    return json.dumps(record.model_dump(mode="json"))


def write_dataset(
    env: str,
    episodes: int,
    num_tasks: int,
    kind: str,
    master_seed: int,
    cap: int,
    path: str,
    config: Optional[GridConfig] = None,
    workers: int = 1,
) -> str:
    """Generate a dataset and write it as UTF-8 JSON Lines, one record per line.

    Returns:
        str: The path written.

    Raises:
        ConfigError: On an unknown environment or task kind mismatch.
        ResampleExhaustedError: If an episode could not be generated.
        OutputWriteError: If the file cannot be written.
    """
    records = generate_records(env, episodes, num_tasks, kind, master_seed, cap, config, workers)
    try:
        ensure_parent_dir(path)
        with open(path, "w", encoding="utf-8") as f:
            for record in records:
                f.write(record_to_line(record) + "\n")
    except OSError as e:
        logger.error(f"Could not write dataset to {path}: {e}")
        raise OutputWriteError(f"Could not write dataset to {path}: {e}")
    logger.info(f"Wrote {len(records)} {env} episodes to {path}")
    return path


def parse_record(payload: Any, line: Optional[int] = None) -> EpisodeRecord:
    """Validate one decoded JSON object as an episode record.

    Raises:
        DatasetValidationError: Naming the line and the offending field.
    """
    if not isinstance(payload, dict):
        raise DatasetValidationError(f"line {line}: record must be a JSON object", line=line)
    env = payload.get("env")
    if env not in RECORD_TYPES:
        raise DatasetValidationError(f"line {line}: unknown env tag {env!r}", line=line, field="env")
    try:
        return RECORD_TYPES[env].model_validate(payload)
    except ValidationError as e:
        first = e.errors()[0]
        field = str(first["loc"][0]) if first["loc"] else None
        raise DatasetValidationError(f"line {line}: invalid field '{field}': {first['msg']}", line=line, field=field)


def load_dataset(path: str, replay: bool = False) -> List[EpisodeRecord]:
    """Load and schema-validate a JSON Lines dataset. Blank lines are skipped.

    Args:
        path (str): Dataset file.
        replay (bool): Also replay every record through its environment.

    Raises:
        FileNotFoundError: If the file does not exist.
        DatasetValidationError: On a parse error or an invariant violation.
        ReplayMismatchError: If ``replay`` is set and a record does not replay.
    """
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                payload = json.loads(raw)
            except json.JSONDecodeError as e:
                raise DatasetValidationError(f"line {number}: JSON parse error: {e.msg}", line=number)
            records.append(parse_record(payload, line=number))
    if replay:
        for index, record in enumerate(records):
            replay_validate(record, strict=True, label=f"{path} episode {index}")
    logger.debug(f"Loaded {len(records)} records from {path}")
    return records


def replay_validate(record: EpisodeRecord, strict: bool = False, label: Optional[str] = None) -> ReplayResult:
    """Replay a record's actions and check them against its boundaries and digest.

    Checks, in order of the step at which they fire: events that never occur in a
    valid demonstration (wrong pickup, blocked move), agreement with the
    demonstrator's own action sequence, task completions against the stored
    boundaries, and the final-state digest.

    Args:
        record (EpisodeRecord): Record to replay.
        strict (bool): Raise instead of returning an invalid result.
        label (str, optional): Names the record in the error message.

    Returns:
        ReplayResult: ``valid`` plus the first divergent step and reason on failure.

    Raises:
        ReplayMismatchError: If ``strict`` is set and the replay diverges.
    """
    result = _replay(record)
    if strict and not result.valid:
        name = label or f"seed {record.seed}"
        logger.error(f"Replay of {name} failed: {result.error}")
        raise ReplayMismatchError(f"{name}: {result.error}", step=result.step)
    return result


def _replay(record: EpisodeRecord) -> ReplayResult:
    adapter = get_adapter(record.env)
    state = adapter.initial_state(record)
    try:
        reference = adapter.demonstrate(state)
    except ResampleError:
        reference = None

    completions = []
    for t, action in enumerate(record.actions, start=1):
        if reference is not None and (t > len(reference) or tuple(np.atleast_1d(reference[t - 1])) != tuple(np.atleast_1d(action))):
            return ReplayResult(valid=False, step=t, error=f"action diverges from the demonstrator at step {t}")
        state, event = adapter.step_raw(state, action)
        if adapter.is_diverged(event):
            return ReplayResult(valid=False, step=t, error=f"invalid event {event.kind.value} at step {t}")
        if event.advanced:
            completions.append(t)

    T = len(record.actions)
    expected = [c + 1 for c in completions[:-1]]
    if len(completions) != len(record.tasks) or (completions and completions[-1] != T):
        return ReplayResult(valid=False, step=T, error=f"{len(completions)} of {len(record.tasks)} tasks completed")
    for stored, actual in zip(record.boundaries, expected):
        if stored != actual:
            return ReplayResult(valid=False, step=min(stored, actual), error=f"boundary mismatch: stored {stored}, replay {actual}")
    if type(record.digest).model_validate(adapter.digest(state)) != record.digest:
        return ReplayResult(valid=False, step=T, error="final-state digest mismatch")
    return ReplayResult(valid=True)


@dataclass
class Batch:
    """Padded, step-major mini-batch.

    Attributes:
        env (str): Environment tag.
        states (np.ndarray): (B, T_max, *obs_shape) float32 observations s_1..s_T.
        actions (np.ndarray): (B, T_max) int64 action ids, 0 beyond each length.
        lengths (np.ndarray): (B,) episode lengths.
        pad_mask (np.ndarray): (B, T_max) bool, True on padded steps.
        boundaries (np.ndarray, optional): (B, M-1) ground-truth boundaries.
        task_types (np.ndarray, optional): (B, M) ground-truth task types.
    """

    env: str
    states: np.ndarray
    actions: np.ndarray
    lengths: np.ndarray
    pad_mask: np.ndarray
    boundaries: Optional[np.ndarray] = None
    task_types: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return int(self.lengths.shape[0])

    @property
    def num_segments(self) -> Optional[int]:
        return None if self.task_types is None else int(self.task_types.shape[1])

    def tensors(self, dtype: torch.dtype = torch.float32) -> Dict[str, Optional[torch.Tensor]]:
        """Torch views of the batch arrays (observations in ``dtype``)."""
        return {
            "states": torch.as_tensor(self.states, dtype=dtype),
            "actions": torch.as_tensor(self.actions, dtype=torch.long),
            "lengths": torch.as_tensor(self.lengths, dtype=torch.long),
            "boundaries": None if self.boundaries is None else torch.as_tensor(self.boundaries, dtype=torch.long),
            "task_types": None if self.task_types is None else torch.as_tensor(self.task_types, dtype=torch.long),
        }

    def select(self, indices: Sequence[int]) -> "Batch":
        """Sub-batch of the given rows, trimmed to its own longest episode."""
        idx = np.asarray(indices, dtype=np.int64)
        width = int(self.lengths[idx].max())
        return Batch(
            env=self.env,
            states=self.states[idx, :width],
            actions=self.actions[idx, :width],
            lengths=self.lengths[idx],
            pad_mask=self.pad_mask[idx, :width],
            boundaries=None if self.boundaries is None else self.boundaries[idx],
            task_types=None if self.task_types is None else self.task_types[idx],
        )


def episode_observations(record: EpisodeRecord) -> np.ndarray:
    """(T, *obs_shape) observations of the states in which each action was taken."""
    adapter = get_adapter(record.env)
    state = adapter.initial_state(record)
    observations = []
    for action in record.actions:
        observations.append(adapter.observe(state))
        state, _ = adapter.step_raw(state, action)
    return np.stack(observations) if observations else np.zeros((0,) + adapter.obs_shape(record), dtype=np.float32)


def make_batch(records: Sequence[EpisodeRecord], max_T: int) -> Batch:
    """Pad records from one environment into a Batch.

    Raises:
        BatchError: On an empty list, mixed environments or observation shapes,
            or a record longer than ``max_T``.
    """
    if not records:
        raise BatchError("cannot batch an empty record list")
    envs = {r.env for r in records}
    if len(envs) != 1:
        raise BatchError(f"records from several environments: {sorted(envs)}")
    adapter = get_adapter(records[0].env)
    shapes = {adapter.obs_shape(r) for r in records}
    if len(shapes) != 1:
        raise BatchError(f"records with different observation shapes: {sorted(shapes)}")
    lengths = np.array([len(r.actions) for r in records], dtype=np.int64)
    too_long = [i for i, n in enumerate(lengths) if n > max_T]
    if too_long:
        raise BatchError(f"record {too_long[0]} has length {lengths[too_long[0]]} > max_T={max_T}")

    width = int(lengths.max())
    obs_shape = shapes.pop()
    states = np.zeros((len(records), width) + obs_shape, dtype=np.float32)
    actions = np.zeros((len(records), width), dtype=np.int64)
    pad_mask = np.ones((len(records), width), dtype=bool)
    for i, record in enumerate(records):
        n = lengths[i]
        states[i, :n] = episode_observations(record)
        actions[i, :n] = adapter.action_ids(record)
        pad_mask[i, :n] = False

    boundaries = task_types = None
    if len({len(r.tasks) for r in records}) == 1:
        boundaries = np.array([r.boundaries for r in records], dtype=np.int64)
        task_types = np.array([[t.type for t in r.tasks] for r in records], dtype=np.int64)
    return Batch(records[0].env, states, actions, lengths, pad_mask, boundaries, task_types)
