from __future__ import annotations

import math
import shlex
import time

from collections import deque
from collections.abc import Mapping
from dataclasses import replace
from typing import Any

import pexpect

from crosslab.exceptions import InvalidInputError, MalformedResponse, PlannerError, PlannerTimeout
from crosslab.nav import scene as scene_mod
from crosslab.nav.camera import goal_in_world
from crosslab.nav.types import (
    Action,
    CameraIntrinsics,
    Goal,
    PlannerQuery,
    PlannerResponse,
    QuestionKind,
    SubTask,
)
from crosslab.output import debug
from crosslab.terrain.world import Pose


def validate_payload(kind: QuestionKind, payload: Any, num_targets: int | None = None) -> Any:
    '''
    Check a planner payload against its question kind and convert it

    :param num_targets: number of intermediations in the scene; sub-task
        targets of a decomposition must index one of them.
    :return: list of SubTask, bool, Action, or a 4-int pixel box / ``None``.
    :raises: MalformedResponse; payloads are never coerced.
    '''
    if kind is QuestionKind.DECOMPOSE:
        if not isinstance(payload, list) or not payload:
            raise MalformedResponse(f"decomposition must be a non-empty list, got {payload!r}")
        try:
            subtasks = [SubTask.from_dict(item) for item in payload]
        except InvalidInputError as exc:
            raise MalformedResponse(str(exc)) from exc
        if subtasks[-1].action is not Action.MOVE_FREELY_TO_GOAL:
            raise MalformedResponse("decomposition must end with MoveFreelyToGoal")
        if num_targets is not None:
            for subtask in subtasks:
                if subtask.target is not None and not 0 <= subtask.target < num_targets:
                    raise MalformedResponse(f"sub-task target {subtask.target} is not in the scene")
        return subtasks
    if kind is QuestionKind.JUDGE_FINISHED:
        if not isinstance(payload, bool):
            raise MalformedResponse(f"judgement must be true or false, got {payload!r}")
        return payload
    if kind is QuestionKind.SELECT_SKILL:
        try:
            return Action.parse(payload)
        except (InvalidInputError, TypeError) as exc:
            raise MalformedResponse(f"unknown skill {payload!r}") from exc
    if payload is None:
        return None
    if not isinstance(payload, list) or len(payload) != 4 or \
            not all(isinstance(v, int) and not isinstance(v, bool) for v in payload):
        raise MalformedResponse(f"bounding box must be four integers, got {payload!r}")
    u_min, v_min, u_max, v_max = payload
    if min(payload) < 0 or u_min > u_max or v_min > v_max:
        raise MalformedResponse(f"bounding box {payload!r} is inverted or negative")
    return list(payload)


class Planner:
    '''
    Base class of the high-level planners

    ``ask`` answers one :class:`PlannerQuery`; callers validate the payload
    with :func:`validate_payload`.
    '''

    def ask(self, query: PlannerQuery) -> PlannerResponse:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class MockPlanner(Planner):
    '''
    Rule-based planner reading ground-truth geometry from the scene descriptor

    Stairs and ramps decompose into facing then climbing across, gaps and
    doors into facing then moving across; every plan ends by moving freely
    to the goal.  Endings are judged on the true pose in the descriptor.
    '''

    def __init__(self, standoff: float = 0.5, goal_tolerance: float = 0.2):
        self.standoff = standoff
        self.goal_tolerance = goal_tolerance

    @classmethod
    def from_config(cls, nav_config) -> MockPlanner:
        return cls(nav_config.standoff, nav_config.goal_tolerance)

    @staticmethod
    def _scene(query: PlannerQuery):
        try:
            scene = query.scene
            intermediations = [scene_mod.Intermediation.from_dict(i) for i in scene.get('intermediations', [])]
            pose = Pose(*(float(v) for v in scene['pose']))
            start = Pose(*(float(v) for v in scene.get('start', (0.0, 0.0, 0.0, 0.0))))
            goal = query.goal or Goal.from_dict(scene['goal'])
            camera = CameraIntrinsics.from_dict(scene['camera'])
            camera_height = float(scene.get('camera_height', 0.3))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed scene descriptor: {exc}") from exc
        return intermediations, pose, start, goal, camera, camera_height

    def _target(self, intermediations, subtask: SubTask | None):
        if subtask is None or subtask.target is None:
            return None
        if not 0 <= subtask.target < len(intermediations):
            raise InvalidInputError(f"sub-task target {subtask.target} is not in the scene")
        return intermediations[subtask.target]

    def decompose(self, intermediations, start: Pose, goal: Goal) -> list[dict]:
        goal_world = goal_in_world(goal, start)
        crossing = [(index, inter) for index, inter in enumerate(intermediations)
                    if scene_mod.between(inter, start, goal_world)]
        crossing.sort(key=lambda item: math.hypot(item[1].x - start.x, item[1].y - start.y))
        subtasks = []
        for index, inter in crossing:
            subtasks.append(SubTask(Action.MOVE_FACING, f"facing the {inter.kind}", index))
            across = Action.CLIMB_ACROSS if inter.kind in scene_mod.CLIMB_KINDS else Action.MOVE_ACROSS
            subtasks.append(SubTask(across, f"across the {inter.kind}", index))
        subtasks.append(SubTask(Action.MOVE_FREELY_TO_GOAL, 'at the goal'))
        return [s.to_dict() for s in subtasks]

    def judge(self, subtask: SubTask, intermediations, pose: Pose, start: Pose, goal: Goal) -> bool:
        if subtask.action is Action.MOVE_FREELY_TO_GOAL:
            target = goal_in_world(goal, start)
            return math.hypot(target.x - pose.x, target.y - pose.y) < self.goal_tolerance
        inter = self._target(intermediations, subtask)
        if inter is None:
            raise InvalidInputError(f"{subtask.action.value} needs a target intermediation")
        if subtask.action is Action.MOVE_FACING:
            return scene_mod.facing(inter, pose, self.standoff) or scene_mod.crossed(inter, pose)
        return scene_mod.crossed(inter, pose)

    def ask(self, query: PlannerQuery) -> PlannerResponse:
        intermediations, pose, start, goal, camera, camera_height = self._scene(query)
        if query.kind is QuestionKind.DECOMPOSE:
            payload: Any = self.decompose(intermediations, start, goal)
        elif query.subtask is None:
            raise InvalidInputError(f"{query.kind.value} needs a sub-task")
        elif query.kind is QuestionKind.JUDGE_FINISHED:
            payload = self.judge(query.subtask, intermediations, pose, start, goal)
        elif query.kind is QuestionKind.SELECT_SKILL:
            payload = query.subtask.action.value
        else:
            inter = self._target(intermediations, query.subtask)
            payload = None if inter is None else scene_mod.detect_bbox(inter, pose, camera, camera_height)
        return PlannerResponse(query.kind, payload)


class ScriptedPlanner(Planner):
    '''
    Replays scripted payloads per question kind, then defers to a fallback

    ``script`` maps question kind names to lists of payloads consumed in
    order.
    '''

    def __init__(self, script: Mapping[str, list] | None = None, fallback: Planner | None = None):
        self.queues: dict[QuestionKind, deque] = {}
        for name, payloads in (script or {}).items():
            try:
                kind = QuestionKind(name)
            except ValueError as exc:
                raise InvalidInputError(f"unknown question kind {name!r} in planner script") from exc
            self.queues[kind] = deque(payloads)
        self.fallback = fallback or MockPlanner()

    def remaining(self, kind: QuestionKind) -> int:
        return len(self.queues.get(kind, ()))

    def ask(self, query: PlannerQuery) -> PlannerResponse:
        queue = self.queues.get(query.kind)
        if queue:
            return PlannerResponse(query.kind, queue.popleft())
        return self.fallback.ask(query)

    def close(self) -> None:
        self.fallback.close()


class RemotePlanner(Planner):
    '''
    Planner behind the line-delimited wire format in a subprocess

    The subprocess is spawned with pexpect; every request waits at most
    ``timeout`` seconds for its one-line answer.  Requests carry increasing
    ``request_id`` values.  An answer that arrives after its request timed
    out is discarded when it shows up: by id when the planner echoes ids,
    by count of timed-out requests when it does not.
    '''

    def __init__(self, command: str, timeout: float = 5.0, cwd: str | None = None, env: dict | None = None):
        # pylint: disable=C0415
        from crosslab.streaming import decode_response, encode_query, request_id_of
        self._encode, self._decode, self._request_id_of = encode_query, decode_response, request_id_of
        argv = shlex.split(command)
        if not argv:
            raise InvalidInputError("remote planner command is empty")
        self.timeout = timeout
        self.last_request_id = 0
        self.late_answers = 0
        try:
            self.child = pexpect.spawn(argv[0], argv[1:], cwd=cwd, env=env, encoding='utf-8',
                                       echo=False, timeout=timeout)
        except pexpect.exceptions.ExceptionPexpect as exc:
            raise PlannerError(f"cannot start planner {command!r}: {exc}") from exc
        debug(f"remote planner started: {command}")

    def _readline(self, query: PlannerQuery, deadline: float) -> str:
        remaining = deadline - time.monotonic()
        try:
            if remaining <= 0:
                raise pexpect.TIMEOUT('deadline passed')
            index = self.child.expect([r'\r?\n', pexpect.EOF], timeout=remaining)
        except pexpect.TIMEOUT as exc:
            self.late_answers += 1
            raise PlannerTimeout(f"planner did not answer {query.kind.value} within {self.timeout}s") from exc
        if index == 1:
            raise PlannerError("planner process exited")
        return self.child.before

    def _is_stale(self, line: str, request_id: int) -> bool:
        answered = self._request_id_of(line)
        if answered == request_id:
            self.late_answers = 0
            return False
        if answered is None and not self.late_answers:
            return False
        self.late_answers = max(self.late_answers - 1, 0)
        debug(f"discarding late planner answer {line[:80]!r}")
        return True

    def ask(self, query: PlannerQuery) -> PlannerResponse:
        self.last_request_id += 1
        request_id = self.last_request_id
        self.child.sendline(self._encode(replace(query, request_id=request_id)))
        deadline = time.monotonic() + self.timeout
        line = self._readline(query, deadline)
        while self._is_stale(line, request_id):
            line = self._readline(query, deadline)
        return self._decode(line)

    def close(self) -> None:
        if self.child.isalive():
            self.child.sendline('{"eof": true}')
            self.child.close(force=True)


def make_planner(nav_config, script: Mapping[str, list] | None = None) -> Planner:
    '''
    The remote planner when ``nav.planner_command`` is set, else the mock one,
    wrapped in a scripted planner when a script is given
    '''
    if nav_config.planner_command:
        planner: Planner = RemotePlanner(nav_config.planner_command, nav_config.planner_timeout)
    else:
        planner = MockPlanner.from_config(nav_config)
    return ScriptedPlanner(script, planner) if script else planner
