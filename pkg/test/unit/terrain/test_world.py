# pylint: disable=W0621

import math

import numpy as np
import pytest

from crosslab.exceptions import InvalidInputError
from crosslab.terrain.world import (
    SCAN_POINTS,
    HeightFieldWorld,
    Pose,
    TileEdge,
    at_tile_edge,
    build_world,
    height_at,
    sample_height_grid,
)


def plane_world(fn, half: float = 3.0, cell: float = 0.05) -> HeightFieldWorld:
    n = int(round(2 * half / cell)) + 1
    coords = -half + np.arange(n) * cell
    xs, ys = np.meshgrid(coords, coords, indexing='ij')
    return HeightFieldWorld.from_array(fn(xs, ys), cell, (-half, -half))


@pytest.fixture(scope='module')
def world():
    return build_world(5)


def test_world_has_80_tiles(world):
    assert world.num_categories == 8
    assert world.num_levels == 10
    assert sum(len(row) for row in world.tiles) == 80
    assert all(tile.extent == 8.0 for row in world.tiles for tile in row)
    x0, x1, y0, y1 = world.inner_bounds
    assert (x1 - x0, y1 - y0) == (64.0, 80.0)


def test_world_is_deterministic(world):
    np.testing.assert_array_equal(world.heights, build_world(5).heights)


def test_tile_of(world):
    cx, cy = world.tile_corner('ramp_up', 3)
    assert world.tile_of(cx + 4.0, cy + 4.0) == (4, 3)
    assert world.tile_of(-0.5, 1.0) is None


def test_spawn_point_is_flat(world):
    x, y = world.spawn_point('stairs_up', 9)
    assert world.height_at(x, y) == 0.0


def test_height_at_bilinear():
    w = HeightFieldWorld.from_array([[0.0, 1.0], [2.0, 3.0]], 1.0)
    assert height_at(w, 0.0, 0.0) == 0.0
    assert height_at(w, 1.0, 1.0) == 3.0
    assert height_at(w, 0.5, 0.5) == pytest.approx(1.5)
    assert height_at(w, 0.25, 0.0) == pytest.approx(0.5)


@pytest.mark.parametrize('point', ((-0.1, 0.5), (0.5, 1.01), (math.nan, 0.0)))
def test_height_at_outside(point):
    w = HeightFieldWorld.from_array(np.zeros((3, 3)), 0.5)
    with pytest.raises(InvalidInputError, match='outside'):
        height_at(w, *point)


def test_from_array_rejects_bad_grids():
    with pytest.raises(InvalidInputError):
        HeightFieldWorld.from_array(np.zeros(4), 0.1)
    with pytest.raises(InvalidInputError):
        HeightFieldWorld.from_array([[0.0, math.inf], [0.0, 0.0]], 0.1)
    with pytest.raises(InvalidInputError):
        HeightFieldWorld.from_array(np.zeros((2, 2)), 0.0)


def test_scan_has_187_points():
    assert SCAN_POINTS.shape == (187, 2)
    sample = sample_height_grid(plane_world(lambda x, y: np.zeros_like(x)), (0.0, 0.0, 0.0, 0.0))
    assert sample.values.shape == (187,)
    assert sample.grid().shape == (17, 11)
    assert np.all(sample.values == 0.0)


def test_scan_is_relative_to_base_height():
    w = plane_world(lambda x, y: np.full_like(x, 0.4))
    sample = sample_height_grid(w, Pose(0.0, 0.0, 0.5, 0.3))
    assert sample.values == pytest.approx(np.full(187, -0.1))


def test_scan_matches_plane():
    w = plane_world(lambda x, y: 0.1 * x + 0.05 * y)
    x0, y0, yaw = 0.3, -0.2, 0.7
    values = sample_height_grid(w, (x0, y0, 0.0, yaw)).values
    c, s = math.cos(yaw), math.sin(yaw)
    px, py = SCAN_POINTS[:, 0], SCAN_POINTS[:, 1]
    expected = 0.1 * (x0 + c * px - s * py) + 0.05 * (y0 + s * px + c * py)
    np.testing.assert_allclose(values, expected, atol=1e-9)


def test_scan_is_yaw_equivariant():
    a = plane_world(lambda x, y: 0.1 * x + 0.05 * y + 0.02 * x * y)
    # b is a turned a quarter turn counter-clockwise
    b = plane_world(lambda x, y: 0.1 * y - 0.05 * x - 0.02 * x * y)
    scan_a = sample_height_grid(a, (0.0, 0.0, 0.0, 0.0)).values
    scan_b = sample_height_grid(b, (0.0, 0.0, 0.0, math.pi / 2)).values
    np.testing.assert_allclose(scan_a, scan_b, atol=1e-6)


def test_at_tile_edge(world):
    cx, cy = world.tile_corner('flat', 2)
    assert at_tile_edge(world, (cx + 4.0, cy + 4.0)) is TileEdge.NONE
    assert not at_tile_edge(world, (cx + 4.0, cy + 4.0))
    assert at_tile_edge(world, (cx + 7.98, cy + 4.0), heading=0.0) is TileEdge.TILE
    assert at_tile_edge(world, (cx + 7.98, cy + 4.0), heading=math.pi / 2) is TileEdge.NONE
    assert at_tile_edge(world, (-0.5, 4.0)) is TileEdge.BORDER
    assert at_tile_edge(world, (-0.5, 4.0))


def test_at_tile_edge_without_tiles():
    w = plane_world(lambda x, y: np.zeros_like(x))
    assert at_tile_edge(w, (0.0, 0.0)) is TileEdge.NONE
    assert at_tile_edge(w, (2.99, 0.0)) is TileEdge.BORDER
