import math

import numpy as np
import pytest

from crosslab.sim import TERM_WEIGHTS, DynamicsParams, compute_reward, place_robot
from crosslab.sim.kinematics import NOMINAL_JOINTS
from crosslab.sim.reward import raw_terms


@pytest.fixture
def states(flat_world):
    prev = place_robot(flat_world, 0.0, 0.0, 0.0, NOMINAL_JOINTS, DynamicsParams())
    return prev, prev.copy()


def test_perfect_tracking(states):
    prev, state = states
    state.lin_vel = np.array([0.5, -0.2, 0.0])
    state.ang_vel = np.array([0.0, 0.0, 0.3])
    reward = compute_reward(prev, state, (0.5, -0.2, 0.3))
    assert reward.lin_vel == pytest.approx(TERM_WEIGHTS['lin_vel'])
    assert reward.ang_vel == pytest.approx(TERM_WEIGHTS['ang_vel'])
    assert reward.alive == TERM_WEIGHTS['alive']


def test_tracking_decays_with_error(states):
    prev, state = states
    terms = raw_terms(prev, state, (0.25, 0.0, 0.25))
    assert terms['lin_vel'] == pytest.approx(math.exp(-1.0))
    assert terms['ang_vel'] == pytest.approx(math.exp(-1.0))


def test_penalties_are_non_positive(states):
    prev, state = states
    state.joint_vel = np.full(12, 0.5)
    state.ang_vel = np.array([0.2, -0.1, 0.0])
    state.energy = 3.0
    terms = raw_terms(prev, state, (0.0, 0.0, 0.0))
    assert terms['energy'] == -3.0
    assert terms['joint_vel'] == pytest.approx(-math.sqrt(12 * 0.25))
    assert terms['ang_stability'] == pytest.approx(-0.3)
    for name in ('joint_acc', 'balance'):
        assert terms[name] <= 0.0


def test_feet_air_scores_touchdowns_only(states):
    prev, state = states
    state.touchdown = np.array([True, False, False, False])
    state.last_air_time = np.array([0.2, 0.9, 0.9, 0.9])
    terms = raw_terms(prev, state, (0.0, 0.0, 0.0))
    assert terms['feet_air'] == pytest.approx((0.2 - 0.3) + 10.0 * (0.5 - 0.2))


def test_balance_compares_diagonals(states):
    prev, state = states
    state.foot_forces = np.array([10.0, 4.0, 10.0, 6.0])
    assert raw_terms(prev, state, (0.0, 0.0, 0.0))['balance'] == pytest.approx(-10.0)


def test_total_is_sum_of_weighted_terms(states):
    prev, state = states
    state.joint_vel = np.full(12, 0.3)
    reward = compute_reward(prev, state, (0.4, 0.1, -0.2))
    parts = reward.to_dict()
    total = parts.pop('total')
    assert total == pytest.approx(sum(parts.values()))
    assert reward.task + reward.performance + reward.style + reward.alive == pytest.approx(total)
