from __future__ import annotations

import math

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, NamedTuple

from crosslab.exceptions import InvalidInputError


class Action(Enum):
    MOVE_FACING = 'MoveFacing'
    MOVE_ACROSS = 'MoveAcross'
    CLIMB_ACROSS = 'ClimbAcross'
    MOVE_FREELY_TO_GOAL = 'MoveFreelyToGoal'

    @classmethod
    def parse(cls, value: Action | str) -> Action:
        if isinstance(value, Action):
            return value
        for action in cls:
            if value in (action.value, action.name):
                return action
        raise InvalidInputError(f"unknown action {value!r}")


class SubTaskStatus(Enum):
    PENDING = 'Pending'
    ACTIVE = 'Active'
    DONE = 'Done'


class QuestionKind(Enum):
    DECOMPOSE = 'Decompose'
    JUDGE_FINISHED = 'JudgeFinished'
    SELECT_SKILL = 'SelectSkill'
    DETECT_INTERMEDIATION = 'DetectIntermediation'


def wrap_angle(angle: float) -> float:
    '''
    Wrap an angle into (-pi, pi]
    '''
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


@dataclass(frozen=True)
class Goal:
    '''
    Navigation target ``(x, y, z, yaw)`` relative to the start pose
    '''
    x: float
    y: float
    z: float = 0.0
    yaw: float = 0.0
    description: str = ''

    def __post_init__(self):
        values = (self.x, self.y, self.z, self.yaw)
        if not all(math.isfinite(v) for v in values):
            raise InvalidInputError(f"goal must be finite, got {values}")
        if not -math.pi < self.yaw <= math.pi:
            raise InvalidInputError(f"goal yaw must be in (-pi, pi], got {self.yaw}")

    def to_dict(self) -> dict[str, Any]:
        return {'x': self.x, 'y': self.y, 'z': self.z, 'yaw': self.yaw, 'description': self.description}

    @classmethod
    def from_dict(cls, data) -> Goal:
        try:
            return cls(float(data['x']), float(data['y']), float(data.get('z', 0.0)),
                       float(data.get('yaw', 0.0)), str(data.get('description', '')))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed goal {data!r}") from exc


class SubGoal(NamedTuple):
    x: float
    y: float
    z: float = 0.0
    yaw: float | None = None


@dataclass
class SubTask:
    '''
    One ``(Action, Ending)`` pair of a plan

    ``target`` indexes the intermediation the sub-task is about, if any.
    A Done sub-task never changes status again.
    '''
    action: Action
    ending: str
    target: int | None = None
    status: SubTaskStatus = SubTaskStatus.PENDING

    def activate(self) -> None:
        if self.status is not SubTaskStatus.PENDING:
            raise InvalidInputError(f"cannot activate a {self.status.value} sub-task")
        self.status = SubTaskStatus.ACTIVE

    def finish(self) -> None:
        if self.status is not SubTaskStatus.ACTIVE:
            raise InvalidInputError(f"cannot finish a {self.status.value} sub-task")
        self.status = SubTaskStatus.DONE

    def to_dict(self) -> dict[str, Any]:
        return {'action': self.action.value, 'ending': self.ending, 'target': self.target}

    @classmethod
    def from_dict(cls, data) -> SubTask:
        if not isinstance(data, dict) or 'action' not in data:
            raise InvalidInputError(f"malformed sub-task {data!r}")
        target = data.get('target')
        if target is not None and (isinstance(target, bool) or not isinstance(target, int)):
            raise InvalidInputError(f"sub-task target must be an integer, got {target!r}")
        return cls(Action.parse(data['action']), str(data.get('ending', '')), target)


@dataclass
class Plan:
    '''
    Ordered sub-tasks with at most one Active at a time
    '''
    subtasks: list[SubTask] = field(default_factory=list)

    def __post_init__(self):
        if not self.subtasks:
            raise InvalidInputError("a plan needs at least one sub-task")
        if self.subtasks[-1].action is not Action.MOVE_FREELY_TO_GOAL:
            raise InvalidInputError("a plan must end with MoveFreelyToGoal")

    def __len__(self) -> int:
        return len(self.subtasks)

    def __iter__(self):
        return iter(self.subtasks)

    @property
    def active(self) -> SubTask | None:
        active = [s for s in self.subtasks if s.status is SubTaskStatus.ACTIVE]
        if len(active) > 1:
            raise InvalidInputError("more than one active sub-task")
        return active[0] if active else None

    def advance(self) -> SubTask | None:
        '''
        Finish the active sub-task and activate the next pending one

        :return: the newly active sub-task, or ``None`` when the plan is done.
        '''
        current = self.active
        if current is not None:
            current.finish()
        for subtask in self.subtasks:
            if subtask.status is SubTaskStatus.PENDING:
                subtask.activate()
                return subtask
        return None

    @property
    def done(self) -> bool:
        return all(s.status is SubTaskStatus.DONE for s in self.subtasks)

    def to_list(self) -> list[dict[str, Any]]:
        return [s.to_dict() for s in self.subtasks]


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    u0: float
    v0: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidInputError("focal lengths must be positive")
        if not (0 <= self.u0 < self.width and 0 <= self.v0 < self.height):
            raise InvalidInputError("principal point must lie inside the image")

    @classmethod
    def from_config(cls, nav_config) -> CameraIntrinsics:
        width, height = nav_config.image_width, nav_config.image_height
        return cls(nav_config.fx, nav_config.fy, width / 2.0, height / 2.0, width, height)

    def contains(self, i: float, j: float) -> bool:
        return 0 <= i <= self.width - 1 and 0 <= j <= self.height - 1

    def to_dict(self) -> dict[str, Any]:
        return {'fx': self.fx, 'fy': self.fy, 'u0': self.u0, 'v0': self.v0,
                'width': self.width, 'height': self.height}

    @classmethod
    def from_dict(cls, data) -> CameraIntrinsics:
        return cls(float(data['fx']), float(data['fy']), float(data['u0']), float(data['v0']),
                   int(data['width']), int(data['height']))


class VelocityCommand(NamedTuple):
    vx: float = 0.0
    vy: float = 0.0
    wz: float = 0.0

    @property
    def is_zero(self) -> bool:
        return self.vx == 0.0 and self.vy == 0.0 and self.wz == 0.0


@dataclass
class PlannerQuery:
    '''
    One question to the planner about a simulated scene descriptor
    '''
    kind: QuestionKind
    scene: dict[str, Any]
    goal: Goal | None = None
    subtask: SubTask | None = None
    request_id: int | None = None


@dataclass
class PlannerResponse:
    '''
    Planner answer; ``payload`` depends on the question kind

    Decompose: list of sub-task mappings.  JudgeFinished: bool.
    SelectSkill: an action name.  DetectIntermediation: pixel box or ``None``.
    ``request_id`` echoes the id of the query it answers.
    '''
    kind: QuestionKind
    payload: Any = None
    request_id: int | None = None
