"""
Pydantic schemas for JSON Lines episode records.

One schema per environment tag. Field order matches the serialized key order, so
``model_dump(mode="json")`` produces the on-disk layout directly.
"""

from typing import Dict, List, Literal, Optional, Tuple, Type, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

from ..constants import NUM_GRID_ACTIONS, NUM_OBJECT_TYPES


class TaskEntry(BaseModel):
    """Schema for one task of a task list.

    Attributes:
        kind (str): visit, pickup or reach.
        type (int): Object / target type.
    """

    model_config = ConfigDict(extra="forbid")

    kind: Literal["visit", "pickup", "reach"]
    type: int = Field(ge=0, lt=NUM_OBJECT_TYPES)


class ObjectEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: int = Field(ge=0, lt=NUM_OBJECT_TYPES)
    pos: Tuple[int, int]


class TargetEntry(BaseModel):
    """Reacher target: type and (x, y) centre."""

    model_config = ConfigDict(extra="forbid")

    type: int = Field(ge=0, lt=NUM_OBJECT_TYPES)
    pos: Tuple[float, float]


class GridDigest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    agent: Tuple[int, int]
    removed: List[int]


class ReacherDigest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    theta: Tuple[float, float]


class _BoundaryChecks(BaseModel):
    """Shared invariants: boundaries strictly increasing in {2..T+1}, one per task junction."""

    model_config = ConfigDict(extra="forbid")

    @field_validator("boundaries", check_fields=False)
    @classmethod
    def _check_boundaries(cls, value: List[int], info: ValidationInfo) -> List[int]:
        actions = info.data.get("actions")
        tasks = info.data.get("tasks")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("boundaries must be strictly increasing")
        if actions is not None and any(not 2 <= b <= len(actions) + 1 for b in value):
            raise ValueError(f"boundaries must lie in 2..{len(actions) + 1}")
        if tasks is not None and len(value) != max(len(tasks) - 1, 0):
            raise ValueError(f"expected {max(len(tasks) - 1, 0)} boundaries for {len(tasks)} tasks")
        return value


class GridRecord(_BoundaryChecks):
    """Grid world demonstration."""

    env: Literal["grid"]
    seed: int
    walls: List[Tuple[int, int]]
    objects: List[ObjectEntry]
    agent_start: Tuple[int, int]
    tasks: List[TaskEntry]
    actions: List[int]
    boundaries: List[int]
    digest: GridDigest

    @field_validator("tasks")
    @classmethod
    def _grid_kinds(cls, value: List[TaskEntry]) -> List[TaskEntry]:
        if any(t.kind == "reach" for t in value):
            raise ValueError("reach tasks are reacher-only")
        return value

    @field_validator("actions")
    @classmethod
    def _action_ids(cls, value: List[int]) -> List[int]:
        if any(not 0 <= a < NUM_GRID_ACTIONS for a in value):
            raise ValueError(f"grid action ids must lie in 0..{NUM_GRID_ACTIONS - 1}")
        return value


class ReacherRecord(_BoundaryChecks):
    """Reacher demonstration; actions are raw (shoulder, elbow) commands."""

    env: Literal["reacher"]
    seed: int
    targets: List[TargetEntry]
    theta_start: Tuple[float, float]
    tasks: List[TaskEntry]
    actions: List[Tuple[float, float]]
    boundaries: List[int]
    digest: ReacherDigest

    @field_validator("tasks")
    @classmethod
    def _reach_only(cls, value: List[TaskEntry]) -> List[TaskEntry]:
        if any(t.kind != "reach" for t in value):
            raise ValueError("reacher tasks must be reach tasks")
        return value


EpisodeRecord = Union[GridRecord, ReacherRecord]

RECORD_TYPES: Dict[str, Type[BaseModel]] = {
    "grid": GridRecord,
    "reacher": ReacherRecord,
}


class ReplayResult(BaseModel):
    """Schema for the result of replaying one record.

    Attributes:
        valid (bool): Whether the replay matched the record.
        step (int, optional): 1-based first divergent step on failure.
        error (str, optional): Reason for the failure.
    """

    valid: bool
    step: Optional[int] = None
    error: Optional[str] = None
