import numpy as np
import pytest

from crosslab.exceptions import InvalidInputError
from crosslab.ppo import RolloutBuffer, compute_gae, gae, normalize_advantages


def column(values):
    return np.array(values, dtype=np.float64)[:, None]


def test_gae_hand_computed():
    adv, ret = gae(column([1, 1, 1]), column([0.5, 0.5, 0.5]), column([0, 0, 0]), np.array([0.5]),
                   gamma=0.9, lam=0.8)
    assert adv[:, 0] == pytest.approx([2.12648, 1.634, 0.95])
    assert ret[:, 0] == pytest.approx(adv[:, 0] + 0.5)


def test_gae_stops_at_done():
    adv, _ = gae(column([1, 1, 1]), column([0.5, 0.5, 0.5]), column([0, 1, 0]), np.array([0.5]),
                 gamma=0.9, lam=0.8)
    assert adv[:, 0] == pytest.approx([1.31, 0.5, 0.95])


def test_gae_bootstraps_successful_termination():
    adv, _ = gae(column([1, 1, 1]), column([0.5, 0.5, 0.5]), column([0, 1, 0]), np.array([0.5]),
                 gamma=0.9, lam=0.8, bootstrap=column([0, 2.0, 0]))
    assert adv[:, 0] == pytest.approx([2.606, 2.3, 0.95])


def test_gae_without_discount_is_return_minus_value():
    rewards = np.array([[1.0, 0.0], [2.0, 1.0], [3.0, 1.0]])
    values = np.array([[0.5, 0.1], [0.2, 0.3], [0.0, 0.4]])
    adv, ret = gae(rewards, values, np.zeros((3, 2)), np.zeros(2), gamma=1.0, lam=1.0)
    assert ret[:, 0] == pytest.approx([6.0, 5.0, 3.0])
    assert ret[:, 1] == pytest.approx([2.0, 2.0, 1.0])
    assert adv == pytest.approx(ret - values)


def test_normalize_advantages():
    out = normalize_advantages(np.array([[1.0, 2.0], [3.0, 6.0]]))
    assert out.mean() == pytest.approx(0.0)
    assert out.std() == pytest.approx(1.0, rel=1e-6)


def test_buffer_defaults_and_guards():
    buffer = RolloutBuffer(num_envs=3, steps=4)
    assert len(buffer) == 12
    assert buffer.obs['terrain'].shape == (4, 3, 187)
    assert not buffer.full
    with pytest.raises(InvalidInputError, match='0 of 4'):
        compute_gae(buffer)
    with pytest.raises(InvalidInputError):
        RolloutBuffer(num_envs=0)


def test_minibatches_cover_whole_sequences():
    buffer = RolloutBuffer(num_envs=5, steps=3)
    buffer.advantages = np.zeros((3, 5))
    buffer.returns = np.zeros((3, 5))
    buffer.actions[:] = np.arange(5)[None, :, None]
    seen = []
    for env_index, flat in buffer.minibatches(2, np.random.default_rng(0)):
        seen.extend(env_index.tolist())
        assert flat['actions'].shape == (3 * len(env_index), 12)
        assert flat['advantages'].shape == (3 * len(env_index),)
        np.testing.assert_array_equal(flat['actions'][:len(env_index), 0], env_index)
    assert sorted(seen) == [0, 1, 2, 3, 4]


def test_more_minibatches_than_envs():
    buffer = RolloutBuffer(num_envs=2, steps=2)
    assert len(list(buffer.minibatches(8, np.random.default_rng(0)))) == 2
