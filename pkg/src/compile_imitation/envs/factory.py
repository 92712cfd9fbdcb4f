"""
Registry of environment adapters.

An adapter turns one environment module into the uniform surface the dataset,
training and inference code rely on: record generation, state reconstruction from a
record, transitions over integer action ids, observations and replay digests.
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Tuple, Type

from ..constants import (
    MAX_RESAMPLE_ATTEMPTS,
    NUM_GRID_ACTIONS,
    NUM_REACHER_ACTIONS,
    ONLINE_STEP_LIMIT,
    REACHER_OBS_DIM,
    REACHER_STEP_LIMIT,
    GRID_CHANNELS,
)
from ..data.schemas import GridRecord, ReacherRecord
from ..utils.error_helpers import ConfigError
from ..utils.retry import resample_on_failure
from . import grid, reacher
from .tasks import Event, EventKind, TaskKind, TaskSpec

logger = logging.getLogger(__name__)


class EnvAdapter(ABC):
    """Abstract environment surface.

    Methods:
        generate_record(seed, num_tasks, kind, cap, config):
            Generate one demonstration record.
        initial_state(record):
            Rebuild the initial state stored in a record.
        step(state, action_id):
            Apply a discrete action id.
        observe(state):
            Observation array for a state.
        action_ids(record):
            Record actions as discrete ids.
        digest(state):
            Final-state digest as serialized in records.
        demonstrate(state):
            Demonstrator actions (record format) from a state.
    """

    tag: str = ""
    num_actions: int = 0
    step_limit: int = ONLINE_STEP_LIMIT

    @abstractmethod
    def generate_record(self, seed: int, num_tasks: int, kind: TaskKind, cap: int, config: Any = None):
        pass

    @abstractmethod
    def initial_state(self, record):
        pass

    @abstractmethod
    def step_raw(self, state, action) -> Tuple[Any, Event]:
        """Apply an action in record format."""
        pass

    @abstractmethod
    def to_env_action(self, action_id: int) -> Any:
        pass

    @abstractmethod
    def observe(self, state):
        pass

    @abstractmethod
    def action_ids(self, record) -> List[int]:
        pass

    @abstractmethod
    def digest(self, state) -> Dict[str, Any]:
        pass

    @abstractmethod
    def demonstrate(self, state) -> List[Any]:
        pass

    @abstractmethod
    def obs_shape(self, record) -> Tuple[int, ...]:
        pass

    def step(self, state, action_id: int) -> Tuple[Any, Event]:
        return self.step_raw(state, self.to_env_action(int(action_id)))

    def is_failure(self, event: Event) -> bool:
        """True when an event ends an online episode as failed."""
        return False

    def is_diverged(self, event: Event) -> bool:
        """True when an event can never occur in a valid demonstration."""
        return self.is_failure(event)


class EnvRegistry:
    """Registry of environment adapters.

    Methods:
        register(tag):
            Decorator to register an adapter class.
        get(tag):
            Adapter instance for a tag.
    """

    _adapters: Dict[str, Type[EnvAdapter]] = {}

    @classmethod
    def register(cls, tag: str):
        def decorator(adapter_class: Type[EnvAdapter]) -> Type[EnvAdapter]:
            adapter_class.tag = tag
            cls._adapters[tag] = adapter_class
            return adapter_class

        return decorator

    @classmethod
    def get(cls, tag: str) -> EnvAdapter:
        """Return an adapter for ``tag``.

        Raises:
            ConfigError: If no adapter is registered for the tag.
        """
        if tag not in cls._adapters:
            raise ConfigError(f"Unknown environment '{tag}' (expected one of {sorted(cls._adapters)})")
        return cls._adapters[tag]()

    @classmethod
    def tags(cls) -> List[str]:
        return sorted(cls._adapters)


def get_adapter(tag: str) -> EnvAdapter:
    return EnvRegistry.get(tag)


@resample_on_failure(max_attempts=MAX_RESAMPLE_ATTEMPTS)
def _grid_episode(seed: int, num_tasks: int, kind: TaskKind, cap: int, config: grid.GridConfig, attempt: int = 0):
    state, tasks = grid.generate_instance(seed, num_tasks, kind, config, attempt=attempt)
    actions, boundaries = grid.generate_demo(state, tasks, cap=cap)
    return state, actions, boundaries


@resample_on_failure(max_attempts=MAX_RESAMPLE_ATTEMPTS)
def _reacher_episode(seed: int, num_tasks: int, cap: int, attempt: int = 0):
    state = reacher.generate_instance(seed, num_tasks, attempt=attempt)
    actions, boundaries = reacher.generate_demo(state, cap=cap)
    return state, actions, boundaries


@EnvRegistry.register("grid")
class GridAdapter(EnvAdapter):
    num_actions = NUM_GRID_ACTIONS
    step_limit = ONLINE_STEP_LIMIT

    def generate_record(self, seed, num_tasks, kind, cap, config=None) -> GridRecord:
        kind = TaskKind(kind)
        state, actions, boundaries = _grid_episode(seed, num_tasks, kind, cap, config or grid.GridConfig())
        final, _ = grid.replay(state, actions)
        layout = state.layout
        return GridRecord(
            env="grid",
            seed=seed,
            walls=sorted(layout.walls),
            objects=[{"type": o.object_type, "pos": o.pos} for o in layout.objects],
            agent_start=layout.agent_start,
            tasks=[t.to_dict() for t in state.tasks],
            actions=actions,
            boundaries=boundaries,
            digest=self.digest(final[-1]),
        )

    def initial_state(self, record: GridRecord) -> grid.GridEnvState:
        walls = frozenset(tuple(w) for w in record.walls)
        size = max(max(r, c) for r, c in walls) + 1 if walls else 0
        layout = grid.GridLayout(
            size=size,
            walls=walls,
            objects=tuple(grid.GridObject(o.type, tuple(o.pos)) for o in record.objects),
            agent_start=tuple(record.agent_start),
        )
        problems = layout.validate()
        if problems:
            raise ConfigError(f"invalid grid layout in record seed={record.seed}: {'; '.join(problems)}")
        tasks = [TaskSpec.from_dict(t.model_dump()) for t in record.tasks]
        return grid.initial_state(layout, tasks)

    def step_raw(self, state, action):
        return grid.step(state, int(action))

    def to_env_action(self, action_id: int) -> int:
        return int(action_id)

    def observe(self, state):
        return grid.observe(state)

    def action_ids(self, record: GridRecord) -> List[int]:
        return list(record.actions)

    def digest(self, state: grid.GridEnvState) -> Dict[str, Any]:
        return {"agent": list(state.agent), "removed": sorted(state.removed)}

    def demonstrate(self, state: grid.GridEnvState) -> List[int]:
        actions, _ = grid.generate_demo(state, state.tasks)
        return actions

    def obs_shape(self, record: GridRecord) -> Tuple[int, ...]:
        size = max(max(r, c) for r, c in record.walls) + 1
        return (size, size, GRID_CHANNELS)

    def is_failure(self, event: Event) -> bool:
        # wrong pickup
        return event.kind == EventKind.PICKED and not event.advanced

    def is_diverged(self, event: Event) -> bool:
        return self.is_failure(event) or event.kind == EventKind.BLOCKED


@EnvRegistry.register("reacher")
class ReacherAdapter(EnvAdapter):
    num_actions = NUM_REACHER_ACTIONS
    step_limit = REACHER_STEP_LIMIT

    def generate_record(self, seed, num_tasks, kind, cap, config=None) -> ReacherRecord:
        if TaskKind(kind) != TaskKind.REACH:
            raise ConfigError(f"reacher tasks must be reach, got {TaskKind(kind).value}")
        state, actions, boundaries = _reacher_episode(seed, num_tasks, cap)
        final, _ = reacher.replay(state, actions)
        return ReacherRecord(
            env="reacher",
            seed=seed,
            targets=[{"type": t.object_type, "pos": (t.x, t.y)} for t in state.targets],
            theta_start=state.theta,
            tasks=[t.to_dict() for t in state.tasks],
            actions=[tuple(a) for a in actions],
            boundaries=boundaries,
            digest=self.digest(final[-1]),
        )

    def initial_state(self, record: ReacherRecord) -> reacher.ReacherState:
        targets = tuple(reacher.ReacherTarget(t.type, float(t.pos[0]), float(t.pos[1])) for t in record.targets)
        tasks = tuple(TaskSpec.from_dict(t.model_dump()) for t in record.tasks)
        theta = (float(record.theta_start[0]), float(record.theta_start[1]))
        return reacher.ReacherState(theta=theta, targets=targets, tasks=tasks)

    def step_raw(self, state, action):
        return reacher.step(state, action)

    def to_env_action(self, action_id: int):
        return reacher.id_to_action(int(action_id))

    def observe(self, state):
        return reacher.observe(state)

    def action_ids(self, record: ReacherRecord) -> List[int]:
        return [reacher.action_to_id(a) for a in record.actions]

    def digest(self, state: reacher.ReacherState) -> Dict[str, Any]:
        return {"theta": [round(t, 9) for t in state.theta]}

    def demonstrate(self, state: reacher.ReacherState) -> List[Tuple[float, float]]:
        actions, _ = reacher.generate_demo(state)
        return actions

    def obs_shape(self, record: ReacherRecord) -> Tuple[int, ...]:
        return (REACHER_OBS_DIM,)
