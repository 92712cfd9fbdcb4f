"""
Two-link planar reacher with typed targets and a scripted geometric controller.

Kinematics only: joint angles integrate commanded angular velocities. Targets sit in
an annulus around the shoulder; touching the current task's target (fingertip within
the target radius) hides it and advances the task list.

Note:
    The controller drives joint commands from a five-level set so that demonstrations
    map onto 25 discrete action ids (``action_to_id`` / ``id_to_action``); stored
    records keep the two raw command numbers per step.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..constants import (
    ANGLE_DEADBAND,
    COMMAND_LEVELS,
    CONTROL_DT,
    LINK_LENGTH,
    MAX_ANGULAR_VELOCITY,
    NUM_OBJECT_TYPES,
    RADIUS_DEADBAND,
    REACH_RADIUS,
    REACHER_MAX_OBJECTS,
    REACHER_OBS_DIM,
    REACHER_STEP_LIMIT,
    TARGET_RADIUS_RANGE,
)
from ..utils.error_helpers import ConfigError, ResampleError
from .tasks import NO_EVENT, Event, EventKind, TaskKind, TaskSpec

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
ReacherAction = Tuple[float, float]


@dataclass(frozen=True)
class ReacherTarget:
    object_type: int
    x: float
    y: float
    visible: bool = True

    @property
    def radius(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class ReacherState:
    """Arm configuration, targets and task progress."""

    theta: Tuple[float, float]
    targets: Tuple[ReacherTarget, ...]
    tasks: Tuple[TaskSpec, ...] = ()
    task_index: int = 0
    step_count: int = 0

    @property
    def current_task(self) -> Optional[TaskSpec]:
        return self.tasks[self.task_index] if self.task_index < len(self.tasks) else None

    @property
    def done(self) -> bool:
        return self.task_index >= len(self.tasks)

    def target_of(self, object_type: int) -> Optional[ReacherTarget]:
        for target in self.targets:
            if target.object_type == object_type:
                return target
        return None


def wrap_angle(angle: float) -> float:
    """Wrap to [0, 2*pi)."""
    wrapped = math.fmod(angle, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    # fmod of a tiny negative can round up to exactly 2*pi
    return 0.0 if wrapped >= TWO_PI else wrapped


def wrap_to_pi(angle: float) -> float:
    """Wrap to [-pi, pi)."""
    return wrap_angle(angle + math.pi) - math.pi


def fingertip(theta: Sequence[float]) -> Tuple[float, float]:
    """Fingertip position for joint angles (shoulder, elbow)."""
    t1, t2 = float(theta[0]), float(theta[1])
    x = LINK_LENGTH * math.cos(t1) + LINK_LENGTH * math.cos(t1 + t2)
    y = LINK_LENGTH * math.sin(t1) + LINK_LENGTH * math.sin(t1 + t2)
    return x, y


def generate_instance(seed: int, num_tasks: int, attempt: int = 0) -> ReacherState:
    """Sample targets, a reach-task list and a start configuration from ``seed``.

    Args:
        seed (int): Instance seed.
        num_tasks (int): Number of reach tasks, in [1, 5].
        attempt (int, optional): Resample index; 0 is the canonical instance.

    Returns:
        ReacherState: Initial state with ``tasks`` filled in.

    Raises:
        ConfigError: If ``num_tasks`` is out of range.
    """
    if not 1 <= num_tasks <= 5:
        raise ConfigError(f"num_tasks must be in [1, 5], got {num_tasks}")
    rng = np.random.default_rng([seed, attempt])
    count = int(rng.integers(num_tasks, REACHER_MAX_OBJECTS + 1))
    types = rng.choice(NUM_OBJECT_TYPES, size=count, replace=False)
    radii = rng.uniform(TARGET_RADIUS_RANGE[0], TARGET_RADIUS_RANGE[1], size=count)
    angles = rng.uniform(0.0, TWO_PI, size=count)
    targets = tuple(
        ReacherTarget(int(t), float(r * math.cos(a)), float(r * math.sin(a)))
        for t, r, a in zip(types, radii, angles)
    )
    task_types = rng.choice(types, size=num_tasks, replace=False)
    tasks = tuple(TaskSpec(TaskKind.REACH, int(t)) for t in task_types)
    theta = rng.uniform(0.0, TWO_PI, size=2)
    return ReacherState(theta=(float(theta[0]), float(theta[1])), targets=targets, tasks=tasks)


def step(state: ReacherState, action: Sequence[float]) -> Tuple[ReacherState, Event]:
    """Integrate one control interval and check the current target for contact."""
    scale = MAX_ANGULAR_VELOCITY * CONTROL_DT
    theta = tuple(
        wrap_angle(t + float(np.clip(w, -1.0, 1.0)) * scale) for t, w in zip(state.theta, action)
    )
    nxt = replace(state, theta=theta, step_count=state.step_count + 1)
    task = state.current_task
    if task is None:
        return nxt, NO_EVENT
    target = state.target_of(task.object_type)
    tip_x, tip_y = fingertip(theta)
    if target is None or math.hypot(tip_x - target.x, tip_y - target.y) > REACH_RADIUS:
        return nxt, NO_EVENT
    targets = tuple(replace(t, visible=False) if t is target else t for t in state.targets)
    nxt = replace(nxt, targets=targets, task_index=state.task_index + 1)
    return nxt, Event(EventKind.REACHED, task.object_type, advanced=True)


def observe(state: ReacherState) -> np.ndarray:
    """32-vector: (visible, x, y) per target type 0..9, then (theta1, theta2)."""
    obs = np.zeros(REACHER_OBS_DIM, dtype=np.float32)
    for target in state.targets:
        base = 3 * target.object_type
        obs[base] = 1.0 if target.visible else 0.0
        obs[base + 1] = target.x
        obs[base + 2] = target.y
    obs[-2], obs[-1] = state.theta
    return obs


def _quantized(sign: float, error_after) -> float:
    """Pick the command magnitude (1 or 0.25) leaving the smaller residual error."""
    full, fine = COMMAND_LEVELS[-1], COMMAND_LEVELS[-2]
    return sign * (full if abs(error_after(sign * full)) <= abs(error_after(sign * fine)) else fine)


def scripted_action(state: ReacherState) -> ReacherAction:
    """Geometric controller: elbow sets the fingertip radius, shoulder the direction.

    Returns (0, 0) when no task is left or both errors are inside their dead-bands.
    """
    task = state.current_task
    if task is None:
        return (0.0, 0.0)
    target = state.target_of(task.object_type)
    if target is None:
        return (0.0, 0.0)
    t1, t2 = state.theta
    scale = MAX_ANGULAR_VELOCITY * CONTROL_DT
    tip_x, tip_y = fingertip(state.theta)
    r_tip = math.hypot(tip_x, tip_y)
    r_tgt = target.radius
    phi_err = wrap_to_pi(math.atan2(target.y, target.x) - math.atan2(tip_y, tip_x))

    elbow = 0.0
    if abs(r_tip - r_tgt) > RADIUS_DEADBAND:
        # opening moves theta2 towards 0
        open_sign = -1.0 if math.sin(t2) > 0.0 else 1.0
        sign = open_sign if r_tip < r_tgt else -open_sign

        def radius_error(cmd: float) -> float:
            return math.hypot(*fingertip((t1, t2 + cmd * scale))) - r_tgt

        elbow = _quantized(sign, radius_error)

    shoulder = 0.0
    if abs(phi_err) > ANGLE_DEADBAND:
        shoulder = _quantized(math.copysign(1.0, phi_err), lambda cmd: phi_err - cmd * scale)
    return (shoulder, elbow)


def generate_demo(state: ReacherState, cap: int = REACHER_STEP_LIMIT) -> Tuple[List[ReacherAction], List[int]]:
    """Roll the scripted controller until every task is reached.

    Boundaries are the 1-based step following each reached event except the last.

    Raises:
        ResampleError: If the controller does not finish within min(cap, 100) steps.
    """
    limit = min(cap, REACHER_STEP_LIMIT)
    actions: List[ReacherAction] = []
    boundaries: List[int] = []
    while not state.done and len(actions) < limit:
        action = scripted_action(state)
        state, event = step(state, action)
        actions.append(action)
        if event.advanced and not state.done:
            boundaries.append(len(actions) + 1)
    if not state.done:
        raise ResampleError(f"controller did not finish {len(state.tasks)} tasks in {limit} steps")
    return actions, boundaries


def action_to_id(action: Sequence[float]) -> int:
    """Nearest command level per joint, combined as shoulder * 5 + elbow."""
    levels = np.asarray(COMMAND_LEVELS)
    i1 = int(np.argmin(np.abs(levels - float(action[0]))))
    i2 = int(np.argmin(np.abs(levels - float(action[1]))))
    return i1 * len(COMMAND_LEVELS) + i2


def id_to_action(action_id: int) -> ReacherAction:
    n = len(COMMAND_LEVELS)
    return (float(COMMAND_LEVELS[action_id // n]), float(COMMAND_LEVELS[action_id % n]))


def replay(state: ReacherState, actions: Sequence[Sequence[float]]) -> Tuple[List[ReacherState], List[Event]]:
    """Run ``actions`` from ``state``; returns the T+1 visited states and T events."""
    states = [state]
    events = []
    for action in actions:
        state, event = step(state, action)
        states.append(state)
        events.append(event)
    return states, events
