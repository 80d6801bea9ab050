import math

import numpy as np
import pytest

from crosslab.config import RunConfig
from crosslab.exceptions import InvalidInputError
from crosslab.nav.scene import (
    STEP_HEIGHT,
    Intermediation,
    build_scene,
    crossed,
    detect_bbox,
    facing,
    render_depth,
)
from crosslab.terrain.world import Pose

NAV = RunConfig().nav


def test_scene_is_seeded():
    a = build_scene('stairs', 'forward', 4, NAV)
    b = build_scene('stairs', 'forward', 4, NAV)
    c = build_scene('stairs', 'forward', 5, NAV)
    assert a.goal == b.goal and a.intermediations == b.intermediations
    assert a.goal != c.goal
    assert a.name == 'stairs-forward-4'


@pytest.mark.parametrize('direction, yaw', (('forward', 0.0), ('left', math.pi / 2), ('backward', math.pi)))
def test_route_direction(direction, yaw):
    scene = build_scene('ramp', direction, 0, NAV)
    inter, = scene.intermediations
    assert inter.yaw == pytest.approx(yaw)
    assert scene.goal.yaw == pytest.approx(yaw)
    along, _ = inter.route_coordinates(scene.goal.x, scene.goal.y)
    assert along > inter.length


def test_stairs_rise_along_route():
    scene = build_scene('stairs', 'forward', 0, NAV)
    inter, = scene.intermediations
    assert scene.ground(inter.x - 0.2, inter.y) == pytest.approx(0.0)
    assert scene.ground(inter.x + 0.1, inter.y) == pytest.approx(STEP_HEIGHT, abs=1e-9)
    assert scene.goal.z == pytest.approx(4 * STEP_HEIGHT, abs=1e-9)


def test_flat_scene():
    scene = build_scene(None, 'right', 2, NAV)
    assert scene.intermediations == ()
    assert np.all(scene.world.heights == 0.0)
    assert scene.name == 'flat-right-2'


def test_gap_has_virtual_face():
    inter, = build_scene('gap', 'forward', 0, NAV).intermediations
    assert inter.face_height == NAV.face_height


def test_unknown_kind_and_direction():
    with pytest.raises(InvalidInputError):
        build_scene('ladder', 'forward', 0, NAV)
    with pytest.raises(InvalidInputError):
        build_scene('stairs', 'up', 0, NAV)
    with pytest.raises(InvalidInputError, match='malformed intermediation'):
        Intermediation.from_dict({'kind': 'stairs'})


def test_descriptor_round_trip():
    scene = build_scene('door', 'forward', 1, NAV)
    descriptor = scene.descriptor(Pose(0.5, 0.0, 0.0, 0.1))
    assert descriptor['pose'] == [0.5, 0.0, 0.0, 0.1]
    assert tuple(Intermediation.from_dict(i) for i in descriptor['intermediations']) == scene.intermediations


def test_face_detected_ahead_not_behind():
    scene = build_scene('stairs', 'forward', 0, NAV)
    inter, = scene.intermediations
    bbox = detect_bbox(inter, scene.start, scene.camera, scene.camera_height)
    u_min, v_min, u_max, v_max = bbox
    assert u_min < scene.camera.u0 < u_max
    assert detect_bbox(inter, Pose(0.0, 0.0, 0.0, math.pi), scene.camera, scene.camera_height) is None


def test_depth_of_face_ahead():
    inter = Intermediation('door', 2.0, 0.0, 0.0, 1.0, 0.1, 1.0)
    scene = build_scene('door', 'forward', 0, NAV)
    depth = render_depth([inter], Pose(0.0, 0.0, 0.0, 0.0), scene.camera, 0.3)
    assert depth[int(scene.camera.v0), int(scene.camera.u0)] == pytest.approx(2.0)
    assert depth[0, 0] == 0.0


def test_facing_and_crossed():
    inter = Intermediation('gap', 2.0, 0.0, 0.0, 1.6, 0.3, 0.5)
    assert facing(inter, Pose(1.5, 0.0, 0.0, 0.0), 0.5)
    assert not facing(inter, Pose(1.5, 0.0, 0.0, 1.0), 0.5)
    assert not facing(inter, Pose(0.0, 0.0, 0.0, 0.0), 0.5)
    assert not crossed(inter, Pose(2.4, 0.0, 0.0, 0.0))
    assert crossed(inter, Pose(2.6, 0.0, 0.0, 0.0))
