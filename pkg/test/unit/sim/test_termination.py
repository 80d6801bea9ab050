import pytest

from crosslab.sim import DynamicsParams, Status, check_termination, place_robot
from crosslab.sim.kinematics import NOMINAL_JOINTS, quat_from_euler


@pytest.fixture
def state(flat_world):
    return place_robot(flat_world, 0.0, 0.0, 0.0, NOMINAL_JOINTS, DynamicsParams())


@pytest.mark.parametrize('euler, expected', (
    ((0.9, 0.0, 0.0), Status.FALL_ROLL),
    ((0.0, -1.1, 0.0), Status.FALL_PITCH),
    ((0.9, 1.1, 0.0), Status.FALL_ROLL),
    ((0.5, 0.5, 3.0), Status.RUNNING),
))
def test_falls(state, euler, expected):
    state.orientation = quat_from_euler(*euler)
    assert check_termination(state, [], 1.0) is expected


def test_timeout(state):
    assert check_termination(state, [], 20.0) is Status.TIMEOUT
    assert check_termination(state, [], 19.98) is Status.RUNNING


def test_stuck_needs_full_window(state):
    history = [(0.0, 0.0, 0.0), (0.5, 0.0, 0.0)]
    assert check_termination(state, history, 1.0) is Status.STUCK
    assert check_termination(state, history[1:], 1.0) is Status.RUNNING
    assert check_termination(state, history, 1.0, stuck_enabled=False) is Status.RUNNING


def test_moving_robot_is_not_stuck(state):
    state.position[0] = 0.2
    assert check_termination(state, [(0.0, 0.0, 0.0)], 1.0) is Status.RUNNING


def test_edge_of_world(state, flat_world):
    state.position[0] = 3.99
    assert check_termination(state, [], 1.0, world=flat_world) is Status.EDGE_REACHED


def test_status_flags():
    assert Status.TIMEOUT.success and Status.EDGE_REACHED.success
    assert not Status.STUCK.success
    assert Status.FAULT.done
    assert not Status.RUNNING.done
