"""
Deterministic multi-task grid world with a breadth-first-search demonstrator.

The agent moves on a square grid enclosed by walls, visits objects by stepping onto
them and picks them up with directional pick-up actions. Instances are generated from
a seed (maze walls thinned to a keep-rate, six typed objects, a task list over the
types present) and demonstrations follow shortest paths leg by leg.

Key Features:
- Pure state transitions over frozen dataclasses; safe to share across workers.
- Fixed action order: move N/E/S/W, pick up N/E/S/W.
- BFS expands neighbours in N, E, S, W order and stops at the first target found.
- Ground-truth boundaries b_i point at the first action of segment i+1 (1-based).
"""

import logging
from collections import deque
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from ..constants import (
    DIRECTIONS,
    GRID_CHANNELS,
    GRID_SIZE,
    MAX_RESAMPLE_ATTEMPTS,
    NUM_OBJECT_TYPES,
    NUM_OBJECTS,
    PLAYER_CHANNEL,
    WALL_CHANNEL,
    WALL_KEEP_RATE,
)
from ..utils.error_helpers import ConfigError, ResampleError
from ..utils.retry import resample_on_failure
from .maze import Cell, border_cells, generate_walls
from .tasks import BLOCKED, NO_EVENT, Event, EventKind, TaskKind, TaskSpec

logger = logging.getLogger(__name__)


class GridAction(IntEnum):
    """The eight primitive actions, in their serialized order."""

    MOVE_N = 0
    MOVE_E = 1
    MOVE_S = 2
    MOVE_W = 3
    PICKUP_N = 4
    PICKUP_E = 5
    PICKUP_S = 6
    PICKUP_W = 7

    @property
    def is_pickup(self) -> bool:
        return self >= GridAction.PICKUP_N

    @property
    def direction(self) -> Tuple[int, int]:
        return DIRECTIONS[int(self) % 4]

    @classmethod
    def move(cls, direction_index: int) -> "GridAction":
        return cls(direction_index)

    @classmethod
    def pickup(cls, direction_index: int) -> "GridAction":
        return cls(4 + direction_index)


@dataclass(frozen=True)
class GridConfig:
    """Generation parameters; the defaults are the standard 10x10 world."""

    size: int = GRID_SIZE
    num_object_types: int = NUM_OBJECT_TYPES
    num_objects: int = NUM_OBJECTS
    wall_keep_rate: float = WALL_KEEP_RATE

    def validate(self) -> None:
        if self.size < 4:
            raise ConfigError(f"grid size must be at least 4, got {self.size}")
        if not 1 <= self.num_object_types <= NUM_OBJECT_TYPES:
            raise ConfigError(f"num_object_types must be in [1, {NUM_OBJECT_TYPES}], got {self.num_object_types}")
        if not 0.0 <= self.wall_keep_rate <= 1.0:
            raise ConfigError(f"wall_keep_rate must be in [0, 1], got {self.wall_keep_rate}")


@dataclass(frozen=True)
class GridObject:
    object_type: int
    pos: Cell


@dataclass(frozen=True)
class GridLayout:
    """Static scene: walls, typed objects and the agent's start cell."""

    size: int
    walls: FrozenSet[Cell]
    objects: Tuple[GridObject, ...]
    agent_start: Cell

    def validate(self) -> List[str]:
        """Return a list of invariant violations, empty if the layout is well-formed."""
        problems = []
        if not border_cells(self.size) <= self.walls:
            problems.append("border cells must all be walls")
        cells = [o.pos for o in self.objects]
        if len(set(cells)) != len(cells):
            problems.append("two objects share a cell")
        for obj in self.objects:
            if obj.pos in self.walls:
                problems.append(f"object at {obj.pos} sits on a wall")
            if not 0 <= obj.object_type < NUM_OBJECT_TYPES:
                problems.append(f"object type {obj.object_type} out of range")
        if self.agent_start in self.walls:
            problems.append("agent starts on a wall")
        return problems

    def is_free(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.size and 0 <= c < self.size and cell not in self.walls


@dataclass(frozen=True)
class GridEnvState:
    """Full dynamic state of a grid episode."""

    layout: GridLayout
    agent: Cell
    removed: FrozenSet[int] = frozenset()
    tasks: Tuple[TaskSpec, ...] = ()
    task_index: int = 0
    step_count: int = 0

    @property
    def current_task(self) -> Optional[TaskSpec]:
        return self.tasks[self.task_index] if self.task_index < len(self.tasks) else None

    @property
    def done(self) -> bool:
        return self.task_index >= len(self.tasks)

    def object_at(self, cell: Cell) -> Optional[int]:
        """Index of the un-removed object occupying ``cell``, if any."""
        for idx, obj in enumerate(self.layout.objects):
            if obj.pos == cell and idx not in self.removed:
                return idx
        return None


def initial_state(layout: GridLayout, tasks: Sequence[TaskSpec]) -> GridEnvState:
    return GridEnvState(layout=layout, agent=layout.agent_start, tasks=tuple(tasks))


def _neighbour(cell: Cell, direction: Tuple[int, int]) -> Cell:
    return (cell[0] + direction[0], cell[1] + direction[1])


def reachable_cells(layout: GridLayout, start: Cell) -> FrozenSet[Cell]:
    """All free cells connected to ``start`` through movement transitions."""
    seen = {start}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        for d in DIRECTIONS:
            nxt = _neighbour(cell, d)
            if nxt not in seen and layout.is_free(nxt):
                seen.add(nxt)
                queue.append(nxt)
    return frozenset(seen)


@resample_on_failure(max_attempts=MAX_RESAMPLE_ATTEMPTS)
def _sample_instance(seed: int, num_tasks: int, kind: TaskKind, config: GridConfig, attempt: int = 0) -> GridEnvState:
    rng = np.random.default_rng([seed, attempt])
    size = config.size
    walls = generate_walls(size, config.wall_keep_rate, rng)
    free = sorted((r, c) for r in range(1, size - 1) for c in range(1, size - 1) if (r, c) not in walls)
    if len(free) < config.num_objects + 1:
        raise ResampleError("not enough free cells")

    picks = rng.choice(len(free), size=config.num_objects + 1, replace=False)
    agent_start = free[int(picks[0])]
    types = rng.integers(0, config.num_object_types, size=config.num_objects)
    objects = tuple(GridObject(int(t), free[int(p)]) for t, p in zip(types, picks[1:]))

    present = sorted({o.object_type for o in objects})
    if len(present) < num_tasks:
        raise ResampleError(f"only {len(present)} distinct types for {num_tasks} tasks")
    task_types = rng.choice(present, size=num_tasks, replace=False)
    tasks = tuple(TaskSpec(kind, int(t)) for t in task_types)

    layout = GridLayout(size=size, walls=frozenset(walls), objects=objects, agent_start=agent_start)
    reachable = reachable_cells(layout, agent_start)
    for task in tasks:
        if not any(o.object_type == task.object_type and o.pos in reachable for o in objects):
            raise ResampleError(f"no reachable object of type {task.object_type}")
    return initial_state(layout, tasks)


def generate_instance(
    seed: int,
    num_tasks: int,
    kind: TaskKind,
    config: Optional[GridConfig] = None,
    attempt: int = 0,
) -> Tuple[GridEnvState, List[TaskSpec]]:
    """Generate a solvable grid instance deterministically from ``seed``.

    Args:
        seed (int): Instance seed.
        num_tasks (int): Task list length in [1, 5].
        kind (TaskKind): VISIT or PICKUP.
        config (GridConfig, optional): Grid size / object parameters.
        attempt (int, optional): First resample attempt; callers that reject an
            instance (e.g. demonstration over cap) ask for the next one.

    Returns:
        tuple: (initial GridEnvState, task list).

    Raises:
        ConfigError: On out-of-range arguments.
        ResampleExhaustedError: If no solvable layout was found in 100 attempts.
    """
    config = config or GridConfig()
    config.validate()
    kind = TaskKind(kind)
    if not 1 <= num_tasks <= 5:
        raise ConfigError(f"num_tasks must be in [1, 5], got {num_tasks}")
    if kind not in (TaskKind.VISIT, TaskKind.PICKUP):
        raise ConfigError(f"grid tasks must be visit or pickup, got {kind.value}")
    state = _sample_instance(seed, num_tasks, kind, config, attempt=attempt)
    return state, list(state.tasks)


def step(state: GridEnvState, action: int) -> Tuple[GridEnvState, Event]:
    """Apply one action and return the next state and the emitted event."""
    action = GridAction(int(action))
    target = _neighbour(state.agent, action.direction)
    task = state.current_task
    count = state.step_count + 1

    if not action.is_pickup:
        if not state.layout.is_free(target):
            return replace(state, step_count=count), BLOCKED
        idx = state.object_at(target)
        if (
            idx is not None
            and task is not None
            and task.kind == TaskKind.VISIT
            and state.layout.objects[idx].object_type == task.object_type
        ):
            nxt = replace(state, agent=target, task_index=state.task_index + 1, step_count=count)
            return nxt, Event(EventKind.VISITED, task.object_type, advanced=True)
        return replace(state, agent=target, step_count=count), NO_EVENT

    idx = state.object_at(target)
    if idx is None:
        return replace(state, step_count=count), NO_EVENT
    obj_type = state.layout.objects[idx].object_type
    removed = state.removed | {idx}
    if task is not None and task.kind == TaskKind.PICKUP and obj_type == task.object_type:
        nxt = replace(state, removed=removed, task_index=state.task_index + 1, step_count=count)
        return nxt, Event(EventKind.PICKED, obj_type, advanced=True)
    return replace(state, removed=removed, step_count=count), Event(EventKind.PICKED, obj_type)


def observe(state: GridEnvState) -> np.ndarray:
    """Binary (size, size, 12) occupancy tensor: 10 type channels, walls, player."""
    size = state.layout.size
    obs = np.zeros((size, size, GRID_CHANNELS), dtype=np.float32)
    for r, c in state.layout.walls:
        obs[r, c, WALL_CHANNEL] = 1.0
    for idx, obj in enumerate(state.layout.objects):
        if idx not in state.removed:
            obs[obj.pos[0], obj.pos[1], obj.object_type] = 1.0
    obs[state.agent[0], state.agent[1], PLAYER_CHANNEL] = 1.0
    return obs


def bfs_path(layout: GridLayout, start: Cell, is_target: Callable[[Cell], bool]) -> Optional[List[int]]:
    """Shortest list of direction indices from ``start`` to the first target discovered.

    Neighbours are expanded in N, E, S, W order; ``start`` itself is never a target.
    Returns None if no target is reachable.
    """
    parents: Dict[Cell, Tuple[Cell, int]] = {}
    seen = {start}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        for d_idx, d in enumerate(DIRECTIONS):
            nxt = _neighbour(cell, d)
            if nxt in seen or not layout.is_free(nxt):
                continue
            seen.add(nxt)
            parents[nxt] = (cell, d_idx)
            if is_target(nxt):
                path = []
                while nxt != start:
                    nxt, d_prev = parents[nxt]
                    path.append(d_prev)
                return path[::-1]
            queue.append(nxt)
    return None


def plan_leg(state: GridEnvState, task: TaskSpec) -> List[int]:
    """Actions solving ``task`` from ``state`` along a BFS shortest path.

    Raises:
        ResampleError: If no object of the task type is reachable.
    """
    def is_target(cell: Cell) -> bool:
        idx = state.object_at(cell)
        return idx is not None and state.layout.objects[idx].object_type == task.object_type

    path = bfs_path(state.layout, state.agent, is_target)
    if not path:
        raise ResampleError(f"no path to an object of type {task.object_type}")
    actions = [int(GridAction.move(d)) for d in path]
    if task.kind == TaskKind.PICKUP:
        actions[-1] = int(GridAction.pickup(path[-1]))
    return actions


def generate_demo(
    state: GridEnvState,
    tasks: Sequence[TaskSpec],
    cap: Optional[int] = None,
) -> Tuple[List[int], List[int]]:
    """Shortest-path demonstration solving ``tasks`` in order.

    Args:
        state (GridEnvState): Initial state.
        tasks (list): Task list (normally ``state.tasks``).
        cap (int, optional): Maximum demonstration length.

    Returns:
        tuple: (action ids, boundaries b_1..b_{M-1}).

    Raises:
        ResampleError: If a task is unsolvable, a leg does not complete its task on
            its final action, or the demonstration exceeds ``cap``.
    """
    state = replace(state, tasks=tuple(tasks), task_index=0)
    actions: List[int] = []
    boundaries: List[int] = []
    for i, task in enumerate(tasks):
        leg = plan_leg(state, task)
        for j, action in enumerate(leg):
            state, event = step(state, action)
            if event.advanced != (j == len(leg) - 1):
                raise ResampleError(f"leg {i} completed its task at step {j + 1} of {len(leg)}")
        actions.extend(leg)
        if i < len(tasks) - 1:
            boundaries.append(len(actions) + 1)
        if cap is not None and len(actions) > cap:
            raise ResampleError(f"demonstration longer than cap {cap}")
    return actions, boundaries


def replay(state: GridEnvState, actions: Sequence[int]) -> Tuple[List[GridEnvState], List[Event]]:
    """Run ``actions`` from ``state``; returns the T+1 visited states and T events."""
    states = [state]
    events = []
    for action in actions:
        state, event = step(state, action)
        states.append(state)
        events.append(event)
    return states, events
