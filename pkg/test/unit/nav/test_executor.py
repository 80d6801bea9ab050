import math

import pytest

from crosslab.config import RunConfig
from crosslab.exceptions import InvalidInputError, MalformedResponse, PlannerError, PlannerTimeout
from crosslab.nav import Action, PlannerQuery, PlannerResponse, QuestionKind, SubGoal, SubTask
from crosslab.nav.controllers import KinematicController
from crosslab.nav.executor import Navigator, ask, navigate
from crosslab.nav.planner import MockPlanner, Planner, ScriptedPlanner
from crosslab.nav.scene import build_scene
from crosslab.terrain.world import Pose

NAV = RunConfig().nav


class FlakyPlanner(Planner):
    def __init__(self, failures):
        self.failures = list(failures)
        self.calls = 0

    def ask(self, query):
        self.calls += 1
        if self.failures:
            raise self.failures.pop(0)
        return PlannerResponse(query.kind, True)


def judge_query():
    return PlannerQuery(QuestionKind.JUDGE_FINISHED, {}, None, SubTask(Action.MOVE_FREELY_TO_GOAL, 'g'))


def test_ask_retries_timeouts():
    planner = FlakyPlanner([PlannerTimeout('slow'), MalformedResponse('junk')])
    assert ask(planner, judge_query(), retries=3) is True
    assert planner.calls == 3


def test_ask_gives_up():
    planner = FlakyPlanner([PlannerTimeout('slow')] * 3)
    with pytest.raises(PlannerError, match='JudgeFinished failed after 3 attempts'):
        ask(planner, judge_query(), retries=3)


def test_ask_rejects_wrong_kind(mocker):
    planner = mocker.Mock(spec=Planner)
    planner.ask.return_value = PlannerResponse(QuestionKind.SELECT_SKILL, 'MoveAcross')
    with pytest.raises(PlannerError, match='answered SelectSkill'):
        ask(planner, judge_query(), retries=2)
    assert planner.ask.call_count == 2


def test_flat_navigation():
    scene = build_scene(None, 'forward', 3, NAV)
    result = navigate(scene, MockPlanner.from_config(NAV), NAV)
    assert result.success
    assert [s['action'] for s in result.plan] == ['MoveFreelyToGoal']
    assert result.final_error < NAV.goal_tolerance
    assert result.skill_executions >= 1
    assert result.trace[0][:3] == (-1, 'plan', 'decompose')


def test_stairs_navigation_order():
    scene = build_scene('stairs', 'forward', 0, NAV)
    result = navigate(scene, MockPlanner.from_config(NAV), NAV)
    assert result.success
    finished = [entry[0] for entry in result.trace if entry[2:] == ('judge', 'finished')]
    assert finished == sorted(finished) == [0, 1, 2]


def test_search_turn_when_not_in_view():
    scene = build_scene('gap', 'forward', 0, NAV)
    planner = ScriptedPlanner({'DetectIntermediation': [None]}, MockPlanner.from_config(NAV))
    navigator = Navigator(scene, planner, KinematicController(scene.world), NAV)
    navigator.controller.reset(scene.start)
    subtask = SubTask(Action.MOVE_FACING, 'facing the gap', 0)
    subgoal = navigator.skill_subgoal(Action.MOVE_FACING, subtask, scene.start)
    assert (subgoal.x, subgoal.y) == (0.0, 0.0)
    assert subgoal.yaw == pytest.approx(math.pi / 2)


def test_move_across_fault_is_retried():
    scene = build_scene('gap', 'forward', 0, NAV)
    script = {'SelectSkill': ['MoveAcross'], 'DetectIntermediation': [None]}
    planner = ScriptedPlanner(script, MockPlanner.from_config(NAV))
    inter, = scene.intermediations
    navigator = Navigator(scene, planner, KinematicController(scene.world), NAV)
    navigator.controller.reset(Pose(inter.x - 0.5, inter.y, 0.0, 0.0))
    executions = navigator.run_subtask(1, SubTask(Action.MOVE_ACROSS, 'across the gap', 0))
    assert executions == 2
    assert navigator.trace[1][2:] == ('MoveAcross', 'fault')
    assert navigator.trace[-1][2:] == ('judge', 'finished')


def test_falls_abort_navigation(mocker):
    scene = build_scene(None, 'forward', 0, NAV)
    controller = KinematicController(scene.world)
    mocker.patch.object(KinematicController, 'fallen', True)
    result = navigate(scene, MockPlanner.from_config(NAV), NAV, controller=controller)
    assert not result.success
    assert 'robot fell' in result.failure


def test_ask_treats_rejected_queries_as_planner_errors():
    planner = FlakyPlanner([InvalidInputError('needs a sub-task')])
    assert ask(planner, judge_query(), retries=2) is True
    with pytest.raises(PlannerError, match='planner rejected JudgeFinished'):
        ask(FlakyPlanner([InvalidInputError('needs a sub-task')] * 2), judge_query(), retries=2)


def test_decomposition_target_outside_scene_fails_navigation():
    scene = build_scene('stairs', 'forward', 1, NAV)
    bad_plan = [
        {'action': 'MoveFacing', 'ending': 'facing the stairs', 'target': 3},
        {'action': 'ClimbAcross', 'ending': 'across the stairs', 'target': 3},
        {'action': 'MoveFreelyToGoal', 'ending': 'at the goal'},
    ]
    planner = ScriptedPlanner({'Decompose': [bad_plan] * NAV.planner_retries}, MockPlanner.from_config(NAV))
    result = navigate(scene, planner, NAV)
    assert not result.success
    assert 'sub-task target 3 is not in the scene' in result.failure
    assert result.skill_executions == 0


def test_bad_target_is_retried():
    scene = build_scene('stairs', 'forward', 1, NAV)
    bad_plan = [{'action': 'MoveFacing', 'ending': 'facing', 'target': 3},
                {'action': 'MoveFreelyToGoal', 'ending': 'at the goal'}]
    planner = ScriptedPlanner({'Decompose': [bad_plan]}, MockPlanner.from_config(NAV))
    result = navigate(scene, planner, NAV)
    assert [s['action'] for s in result.plan] == ['MoveFacing', 'ClimbAcross', 'MoveFreelyToGoal']


def test_skill_aligns_heading_after_arriving(mocker):
    scene = build_scene(None, 'forward', 0, NAV)
    navigator = Navigator(scene, MockPlanner.from_config(NAV), KinematicController(scene.world), NAV)
    start = navigator.controller.reset(scene.start)
    subgoal = SubGoal(start.x + 0.05, start.y, start.z, start.yaw + 0.5)
    mocker.patch.object(navigator, 'skill_subgoal', return_value=subgoal)
    apply = mocker.spy(navigator.controller, 'apply')
    assert navigator.run_skill(Action.MOVE_FACING, SubTask(Action.MOVE_FACING, 'facing', None))
    assert apply.call_count > 0
    assert all(call.args[0].vx == 0.0 and call.args[0].vy == 0.0 for call in apply.call_args_list)
    assert (navigator.pose.x, navigator.pose.y) == (start.x, start.y)
    assert abs(navigator.pose.yaw - subgoal.yaw) < NAV.yaw_tolerance
