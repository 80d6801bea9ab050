import math

import numpy as np
import pytest

from crosslab.exceptions import InvalidInputError
from crosslab.terrain.tiles import Category, difficulty, generate_tile


def test_tile_extent():
    tile = generate_tile('flat', 0, seed=1)
    assert tile.heights.shape == (160, 160)
    assert tile.extent == 8.0
    assert np.all(tile.heights == 0.0)


def test_stairs_up_level_9():
    tile = generate_tile(Category.STAIRS_UP, 9, seed=1)
    profile = tile.heights[:, 0]
    steps = np.diff(profile)
    rises = steps[steps > 1e-12]
    assert rises == pytest.approx(np.full(rises.shape, 0.2), abs=1e-12)
    # 0.3 m treads are six 0.05 m cells
    edges = np.flatnonzero(steps > 1e-12)
    assert np.all(np.diff(edges[1:]) == 6)
    assert np.all(profile[:20] == 0.0)


def test_stairs_down_mirrors_up():
    up = generate_tile('stairs_up', 5, seed=4)
    down = generate_tile('stairs_down', 5, seed=4)
    np.testing.assert_array_equal(down.heights, -up.heights)


def test_ramp_level_9_slope():
    tile = generate_tile('ramp_up', 9, seed=2)
    profile = tile.heights[:, 0]
    slope = np.diff(profile[40:]) / tile.cell_size
    assert slope == pytest.approx(np.full(slope.shape, math.tan(math.radians(30.0))), rel=0.01)


def test_rough_amplitude_bound():
    tile = generate_tile('rough', 9, seed=7)
    assert np.abs(tile.heights).max() == pytest.approx(0.15)
    assert np.all(tile.heights[:20, :] == 0.0)


def test_platform_heights_within_range():
    tile = generate_tile('platform_up', 0, seed=3)
    rises = np.diff(tile.heights[:, 0])
    rises = rises[rises > 1e-12]
    assert rises == pytest.approx(np.full(rises.shape, 0.16))


def test_generation_is_deterministic():
    a = generate_tile('rough', 4, seed=11)
    b = generate_tile('rough', 4, seed=11)
    c = generate_tile('rough', 4, seed=12)
    np.testing.assert_array_equal(a.heights, b.heights)
    assert not np.array_equal(a.heights, c.heights)


@pytest.mark.parametrize('level', (-1, 10, 2.5, True))
def test_invalid_level(level):
    with pytest.raises(InvalidInputError):
        generate_tile('stairs_up', level, seed=0)


def test_unknown_category():
    with pytest.raises(InvalidInputError, match='unknown terrain category'):
        generate_tile('lava', 0, seed=0)


def test_category_parse():
    assert Category.parse('Stairs-Up') is Category.STAIRS_UP
    assert Category.parse(7) is Category.ROUGH
    assert Category.ROUGH.index == 7


def test_difficulty_is_monotonic():
    for category in Category:
        values = [difficulty(category, level) for level in range(10)]
        assert values == sorted(values)
    assert difficulty(Category.STAIRS_UP, 9) == pytest.approx(0.2)
    assert difficulty(Category.PLATFORM_UP, 9) == pytest.approx(0.22)
