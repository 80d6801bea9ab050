from __future__ import annotations

import logging
import math

from dataclasses import dataclass, field
from typing import Any

from crosslab.exceptions import InvalidInputError, PlannerError, SkillFault, SubTaskFailure
from crosslab.nav.camera import across_subgoal, bbox_point, check_bbox, subgoal_from_bbox, to_body
from crosslab.nav.controllers import GroundTruthTerrainStream, KinematicController, Localizer
from crosslab.nav.planner import Planner, validate_payload
from crosslab.nav.scene import Scene, render_depth
from crosslab.nav.skills import ClimbMonitor, NavGains, PDController, heading_command, heading_done, subtask_done
from crosslab.nav.types import (
    Action,
    Goal,
    Plan,
    PlannerQuery,
    QuestionKind,
    SubGoal,
    SubTask,
    VelocityCommand,
    wrap_angle,
)
from crosslab.output import debug
from crosslab.terrain.world import Pose

logger = logging.getLogger(__name__)

SEARCH_TURN = math.pi / 2


def ask(planner: Planner, query: PlannerQuery, retries: int = 3, num_targets: int | None = None) -> Any:
    '''
    Ask the planner, retrying timeouts and malformed answers

    A query the planner rejects as invalid input counts as a planner error.

    :return: the validated payload (see :func:`validate_payload`).
    :raises: PlannerError once ``retries`` attempts have failed.
    '''
    last: PlannerError | None = None
    for attempt in range(1, retries + 1):
        try:
            response = planner.ask(query)
            if response.kind is not query.kind:
                raise PlannerError(f"asked {query.kind.value}, planner answered {response.kind.value}")
            return validate_payload(query.kind, response.payload, num_targets)
        except InvalidInputError as exc:
            last = PlannerError(f"planner rejected {query.kind.value}: {exc}")
            debug(f"planner attempt {attempt}/{retries} for {query.kind.value} failed: {exc}")
        except PlannerError as exc:
            last = exc
            debug(f"planner attempt {attempt}/{retries} for {query.kind.value} failed: {exc}")
    raise PlannerError(f"{query.kind.value} failed after {retries} attempts: {last}") from last


def plan(goal: Goal, planner: Planner, scene: dict, retries: int = 3) -> list[SubTask]:
    '''
    Decompose the route to ``goal`` into sub-tasks

    :param scene: scene descriptor of the start pose.
    :return: a non-empty list ending with MoveFreelyToGoal.
    '''
    return ask(planner, PlannerQuery(QuestionKind.DECOMPOSE, scene, goal), retries,
               num_targets=len(scene.get('intermediations', [])))


@dataclass
class NavResult:
    success: bool
    plan: list[dict] = field(default_factory=list)
    trace: list[tuple] = field(default_factory=list)
    skill_executions: int = 0
    steps: int = 0
    final_error: float = math.inf
    failure: str = ''


class Navigator:
    '''
    Closed-loop sub-task state machine

    For the active sub-task the planner first judges its ending; while it
    is unfinished the planner selects a skill, the skill runs until its own
    done signal and the planner judges again.  The next sub-task starts
    only after the current one is judged finished.
    '''

    def __init__(self, scene: Scene, planner: Planner, controller, nav_config,
                 terrain_stream=None, localizer: Localizer | None = None):
        self.scene = scene
        self.planner = planner
        self.controller = controller
        self.config = nav_config
        self.gains = NavGains.from_config(nav_config)
        self.terrain_stream = terrain_stream or GroundTruthTerrainStream(scene.world)
        self.localizer = localizer or Localizer()
        self.trace: list[tuple] = []
        self.steps = 0
        self.skill_executions = 0

    @property
    def pose(self) -> Pose:
        return self.controller.pose

    def _ask(self, kind: QuestionKind, subtask: SubTask | None = None) -> Any:
        query = PlannerQuery(kind, self.scene.descriptor(self.pose), self.scene.goal, subtask)
        return ask(self.planner, query, self.config.planner_retries)

    def _detect(self, subtask: SubTask) -> list[int] | None:
        bbox = self._ask(QuestionKind.DETECT_INTERMEDIATION, subtask)
        return None if bbox is None else list(check_bbox(bbox, self.scene.camera))

    def _depth(self):
        return render_depth(self.scene.intermediations, self.pose, self.scene.camera, self.scene.camera_height)

    def _search_goal(self, believed: Pose) -> SubGoal:
        goal = self.scene.goal_world
        forward, left = to_body(believed, goal.x, goal.y)
        bearing = math.atan2(left, forward)
        turn = SEARCH_TURN if abs(bearing) < 0.2 else max(-SEARCH_TURN, min(SEARCH_TURN, bearing))
        return SubGoal(believed.x, believed.y, believed.z, wrap_angle(believed.yaw + turn))

    def skill_subgoal(self, skill: Action, subtask: SubTask, believed: Pose) -> SubGoal | None:
        '''
        Sub-goal of one skill execution; ``None`` for climbing, which has none

        :raises: SkillFault when the intermediation cannot be localized.
        '''
        cfg = self.config
        if skill is Action.MOVE_FREELY_TO_GOAL:
            return self.scene.goal_world
        if skill is Action.CLIMB_ACROSS:
            return None
        bbox = self._detect(subtask)
        if bbox is None:
            if skill is Action.MOVE_FACING:
                return self._search_goal(believed)
            raise SkillFault(f"{subtask.ending}: intermediation not in view")
        depth = self._depth()
        if skill is Action.MOVE_FACING:
            return subgoal_from_bbox(bbox, depth, self.scene.camera, believed, cfg.standoff, self.scene.camera_height)
        point = bbox_point(bbox, depth, self.scene.camera, believed, self.scene.camera_height)
        return across_subgoal(point, self.scene.goal_world, believed)

    def _climb_command(self, believed: Pose, heading: float) -> VelocityCommand:
        wz = self.gains.kp_yaw * wrap_angle(heading - believed.yaw)
        limit = self.gains.max_wz
        return VelocityCommand(min(self.config.climb_speed, self.gains.max_vx), 0.0, max(-limit, min(limit, wz)))

    def run_skill(self, skill: Action, subtask: SubTask) -> bool:
        '''
        Execute one skill until its internal done signal or the step limit

        :return: whether the skill signalled done.
        :raises: SkillFault when no sub-goal can be derived, SubTaskFailure when the robot falls.
        '''
        believed = self.localizer.observe(self.pose)
        subgoal = self.skill_subgoal(skill, subtask, believed)
        pd = PDController(self.gains)
        monitor = ClimbMonitor(self.config.climb_debounce)
        heading = believed.yaw
        self.terrain_stream.reset()
        for _ in range(self.config.skill_max_steps):
            if subgoal is None:
                if monitor.update(self.terrain_stream(self.pose, self.controller)):
                    return True
                command = self._climb_command(believed, heading)
            elif subtask_done(believed, subgoal, self.gains.done_radius):
                # arrived: align to the sub-goal heading before signalling done
                if heading_done(believed, subgoal, self.gains.yaw_tolerance):
                    return True
                command = heading_command(believed, subgoal, self.gains)
            else:
                command = pd(believed, subgoal)
            self.controller.apply(command)
            self.steps += 1
            if self.controller.fallen:
                raise SubTaskFailure(f"{subtask.ending}: robot fell", {'steps': self.steps})
            believed = self.localizer.observe(self.pose)
        return False

    def run_subtask(self, index: int, subtask: SubTask) -> int:
        '''
        Drive one active sub-task to a finished judgement

        :return: the number of skill executions it took.
        :raises: SubTaskFailure once ``max_skill_executions`` is exceeded.
        '''
        executions = 0
        while True:
            finished = self._ask(QuestionKind.JUDGE_FINISHED, subtask)
            self.trace.append((index, subtask.action.value, 'judge', 'finished' if finished else 'unfinished'))
            if finished:
                return executions
            if executions >= self.config.max_skill_executions:
                raise SubTaskFailure(
                    f"{subtask.action.value} ({subtask.ending}) not finished after {executions} skill executions",
                    {'subtask': index, 'action': subtask.action.value, 'executions': executions,
                     'pose': [round(float(v), 3) for v in self.pose]})
            skill = self._ask(QuestionKind.SELECT_SKILL, subtask)
            executions += 1
            self.skill_executions += 1
            try:
                done = self.run_skill(skill, subtask)
            except SkillFault as exc:
                debug(f"skill {skill.value} faulted: {exc}")
                self.trace.append((index, subtask.action.value, skill.value, 'fault'))
                continue
            self.trace.append((index, subtask.action.value, skill.value, 'done' if done else 'limit'))

    def navigate(self) -> NavResult:
        '''
        Plan from the start pose and execute every sub-task in order
        '''
        start = self.scene.start
        self.controller.reset(start)
        self.localizer.reset()
        result = NavResult(success=False)
        try:
            subtasks = plan(self.scene.goal, self.planner, self.scene.descriptor(self.pose),
                            self.config.planner_retries)
            state = Plan(subtasks)
            result.plan = state.to_list()
            self.trace.append((-1, 'plan', 'decompose', ','.join(s.action.value for s in subtasks)))
            active = state.advance()
            while active is not None:
                self.run_subtask(subtasks.index(active), active)
                active = state.advance()
            result.success = state.done
        except SubTaskFailure as exc:
            result.failure = str(exc)
            logger.warning("navigation aborted: %s (%s)", exc, exc.diagnostics)
        except PlannerError as exc:
            result.failure = str(exc)
            logger.warning("navigation aborted: %s", exc)
        goal = self.scene.goal_world
        result.final_error = math.hypot(goal.x - self.pose.x, goal.y - self.pose.y)
        result.trace = list(self.trace)
        result.skill_executions = self.skill_executions
        result.steps = self.steps
        return result


def navigate(scene: Scene, planner: Planner, nav_config, controller=None, terrain_stream=None,
             localizer: Localizer | None = None) -> NavResult:
    '''
    Run the navigation state machine once on a scene

    The controller defaults to the kinematic one.
    '''
    if controller is None:
        controller = KinematicController(scene.world, nav_config.max_step_height)
    navigator = Navigator(scene, planner, controller, nav_config, terrain_stream, localizer)
    return navigator.navigate()
