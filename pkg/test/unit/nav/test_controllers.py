import math

import numpy as np
import pytest

from crosslab.nav import VelocityCommand
from crosslab.nav.controllers import (
    GroundTruthTerrainStream,
    KinematicController,
    Localizer,
    PolicyController,
    ScriptedTerrainStream,
)
from crosslab.terrain.world import HeightFieldWorld, Pose


@pytest.fixture
def step_world():
    heights = np.zeros((161, 161))
    heights[100:, :] = 1.0
    return HeightFieldWorld.from_array(heights, 0.05, (-4.0, -4.0))


def test_kinematic_integrates_body_frame(flat_world):
    controller = KinematicController(flat_world)
    controller.reset(Pose(0.0, 0.0, 1.0, math.pi / 2))
    assert controller.pose.z == 0.0
    for _ in range(50):
        pose = controller.apply(VelocityCommand(1.0, 0.0, 0.0))
    assert (pose.x, pose.y) == pytest.approx((0.0, 1.0), abs=1e-9)
    assert controller.last_command == VelocityCommand(1.0, 0.0, 0.0)


def test_kinematic_refuses_high_steps(step_world):
    controller = KinematicController(step_world, max_step_height=0.25)
    controller.reset(Pose(0.9, 0.0, 0.0, 0.0))
    for _ in range(20):
        controller.apply(VelocityCommand(1.0, 0.0, 0.5))
    assert controller.pose.x < 1.0
    assert controller.blocked_steps > 0
    assert controller.pose.yaw == pytest.approx(20 * 0.5 * 0.02)


def test_localizer_without_noise_is_exact():
    pose = Pose(1.0, 2.0, 0.0, 0.3)
    assert Localizer().observe(pose) is pose


def test_localizer_drift_is_seeded():
    a = Localizer(0.1, np.random.default_rng(1))
    b = Localizer(0.1, np.random.default_rng(1))
    pose = Pose(0.0, 0.0, 0.0, 0.0)
    for _ in range(5):
        pa, pb = a.observe(pose), b.observe(pose)
    assert pa == pb
    assert pa != pose
    a.reset()
    assert not a.drift.any()


def test_localizer_arguments():
    with pytest.raises(ValueError):
        Localizer(-0.1)
    with pytest.raises(ValueError):
        Localizer(0.1)


def test_ground_truth_stream(flat_world, step_world):
    assert not GroundTruthTerrainStream(flat_world)(Pose(0.0, 0.0, 0.0, 0.0))
    assert GroundTruthTerrainStream(step_world)(Pose(1.0, 0.0, 0.0, 0.0))


def test_scripted_stream():
    stream = ScriptedTerrainStream([True, False])
    pose = Pose(0.0, 0.0, 0.0, 0.0)
    assert [stream(pose) for _ in range(4)] == [True, False, False, False]
    stream.reset()
    assert stream(pose) is True
    fallback = ScriptedTerrainStream(['terrain'])
    chained = ScriptedTerrainStream([False], fallback)
    assert [chained(pose), chained(pose)] == [False, 'terrain']


def test_policy_controller_steps(flat_world, oracle):
    controller = PolicyController(flat_world, oracle)
    start = controller.reset(Pose(0.0, 0.0, 0.0, 0.0))
    assert (start.x, start.y) == pytest.approx((0.0, 0.0), abs=1e-6)
    pose = controller.apply(VelocityCommand(0.5, 0.0, 0.0))
    assert controller.proprio.shape == (45,)
    assert np.isfinite(list(pose)).all()
