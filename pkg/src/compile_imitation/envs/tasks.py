"""
Task and event types shared by the grid world and the reacher.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional


class TaskKind(Enum):
    """Kinds of sub-task instructions."""

    VISIT = "visit"
    PICKUP = "pickup"
    REACH = "reach"


class EventKind(Enum):
    """Outcome of a single environment transition."""

    NONE = "none"
    VISITED = "visited"
    PICKED = "picked"
    BLOCKED = "blocked"
    REACHED = "reached"


@dataclass(frozen=True)
class TaskSpec:
    """One instruction of a task list.

    Attributes:
        kind (TaskKind): visit, pickup or reach.
        object_type (int): Object / target type in [0, 9].
    """

    kind: TaskKind
    object_type: int

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "type": int(self.object_type)}

    @classmethod
    def from_dict(cls, data: dict) -> "TaskSpec":
        return cls(kind=TaskKind(data["kind"]), object_type=int(data["type"]))


@dataclass(frozen=True)
class Event:
    """Environment event.

    Attributes:
        kind (EventKind): What happened.
        object_type (int, optional): Type involved in a visit, pickup or reach.
        advanced (bool): Whether the transition completed the current task.
    """

    kind: EventKind = EventKind.NONE
    object_type: Optional[int] = None
    advanced: bool = False


NO_EVENT = Event()
BLOCKED = Event(EventKind.BLOCKED)
