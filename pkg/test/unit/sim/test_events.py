import math

import numpy as np
import pytest

from crosslab import defaults
from crosslab.config.run import EnvConfig
from crosslab.sim import LeggedEnv, randomize_dynamics, schedule_events
from crosslab.sim import env as env_module
from crosslab.sim.kinematics import NOMINAL_JOINTS
from crosslab.utils.seeding import SeedStreams


@pytest.fixture
def env_config():
    return EnvConfig()


@pytest.mark.parametrize('t, kinds', (
    (0.0, []),
    (0.02, []),
    (5.0, ['command']),
    (9.0, ['push']),
    (45.0, ['command', 'push']),
))
def test_event_schedule(env_config, t, kinds):
    events = schedule_events(t, np.random.default_rng(0), env_config)
    assert [e.kind for e in events] == kinds


def test_push_magnitude(env_config):
    push, = schedule_events(9.0, np.random.default_rng(1), env_config)
    vx, vy, vz = push.payload
    assert math.hypot(vx, vy) == pytest.approx(env_config.push_velocity)
    assert vz == 0.0


def test_command_within_ranges(env_config):
    command, = schedule_events(10.0, np.random.default_rng(2), env_config)
    vx, vy, wz = command.payload
    assert -1.0 <= vx <= 1.0 and -0.5 <= vy <= 0.5 and -1.0 <= wz <= 1.0


def test_dynamics_within_ranges(env_config):
    for seed in range(20):
        params = randomize_dynamics(env_config, seed)
        assert 0.0 <= params.added_mass <= 3.0
        assert 0.0 <= params.friction <= 2.0
        assert 0.9 <= params.motor_strength <= 1.1
        assert abs(params.com_offset[0]) <= 0.2


def test_dynamics_are_seeded(env_config):
    assert randomize_dynamics(env_config, 4).to_dict() == randomize_dynamics(env_config, 4).to_dict()
    assert randomize_dynamics(env_config, 4).to_dict() != randomize_dynamics(env_config, 5).to_dict()


def test_disabled_randomizations_are_nominal():
    env_config = EnvConfig(disabled_randomizations=['friction', 'com_offset', 'init_base_vel'])
    params = randomize_dynamics(env_config, 7)
    assert params.friction == 1.0
    assert np.all(params.com_offset == 0.0)
    assert params.init_base_vel == (0.0, 0.0)
    assert params.added_mass != 0.0


def _commands(env_config, steps=1000):
    streams = SeedStreams(0)
    command_rng, push_rng = streams.rng('commands', 0), streams.rng('pushes', 0)
    commands = []
    for k in range(1, steps + 1):
        for event in schedule_events(k * defaults.CONTROL_DT, command_rng, env_config, push_rng):
            if event.kind == 'command':
                commands.append(event.payload)
    return commands


def test_push_schedule_leaves_commands_unchanged():
    pushed = _commands(EnvConfig())
    unpushed = _commands(EnvConfig(push_interval=1000.0))
    assert len(pushed) >= 3
    assert pushed == unpushed


def test_env_draws_pushes_from_own_stream(world, small_config, mocker):
    spy = mocker.spy(env_module, 'schedule_events')
    env = LeggedEnv(world, small_config)
    env.reset(('flat', 0))
    env.step(NOMINAL_JOINTS)
    assert spy.called
    _, command_rng, _, push_rng = spy.call_args.args
    assert command_rng is env.command_rng
    assert push_rng is env.push_rng
