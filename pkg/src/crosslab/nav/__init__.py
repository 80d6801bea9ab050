from .types import (  # noqa
    Action,
    CameraIntrinsics,
    Goal,
    Plan,
    PlannerQuery,
    PlannerResponse,
    QuestionKind,
    SubGoal,
    SubTask,
    SubTaskStatus,
    VelocityCommand,
)
from .camera import project, subgoal_from_bbox, unproject  # noqa
from .skills import NavGains, climb_done, subtask_done, velocity_command  # noqa
