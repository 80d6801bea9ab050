from __future__ import annotations

import math

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from crosslab import defaults
from crosslab.exceptions import InvalidInputError
from crosslab.terrain.perlin import perlin2d
from crosslab.utils.seeding import rng_from_seed

MAX_STEP_HEIGHT = 0.2
TREAD_WIDTH = 0.3
PLATFORM_BASE = 0.16
PLATFORM_SPAN = 0.06
PLATFORM_WIDTH = (0.8, 1.5)
MAX_SLOPE_DEG = 30.0
MAX_ROUGH_AMPLITUDE = 0.15


class Category(Enum):
    STAIRS_UP = 'stairs_up'
    STAIRS_DOWN = 'stairs_down'
    PLATFORM_UP = 'platform_up'
    PLATFORM_DOWN = 'platform_down'
    RAMP_UP = 'ramp_up'
    RAMP_DOWN = 'ramp_down'
    FLAT = 'flat'
    ROUGH = 'rough'

    @property
    def index(self) -> int:
        return list(Category).index(self)

    @classmethod
    def parse(cls, value: Category | str | int) -> Category:
        if isinstance(value, Category):
            return value
        if isinstance(value, int) and not isinstance(value, bool):
            if 0 <= value < len(cls):
                return list(cls)[value]
        elif isinstance(value, str):
            try:
                return cls(value.lower().replace('-', '_'))
            except ValueError:
                pass
        raise InvalidInputError(f"unknown terrain category {value!r}")


def difficulty(category: Category, level: int) -> float:
    '''
    Difficulty parameter of a category at a level

    Step height (m), platform height (m), slope (degrees) or noise
    amplitude (m); linear in level and zero-based except for platforms.
    '''
    frac = level / (defaults.NUM_LEVELS - 1)
    if category in (Category.STAIRS_UP, Category.STAIRS_DOWN):
        return MAX_STEP_HEIGHT * frac
    if category in (Category.PLATFORM_UP, Category.PLATFORM_DOWN):
        return PLATFORM_BASE + PLATFORM_SPAN * frac
    if category in (Category.RAMP_UP, Category.RAMP_DOWN):
        return MAX_SLOPE_DEG * frac
    if category is Category.ROUGH:
        return MAX_ROUGH_AMPLITUDE * frac
    return 0.0


@dataclass(frozen=True)
class HeightFieldTile:
    category: Category
    level: int
    cell_size: float
    heights: np.ndarray = field(repr=False)
    seed: int
    extent: float = defaults.TILE_SIZE

    @property
    def difficulty(self) -> float:
        return difficulty(self.category, self.level)


def _check_level(level) -> int:
    if isinstance(level, bool) or not isinstance(level, (int, np.integer)):
        raise InvalidInputError(f"level must be an integer in 0..9, got {level!r}")
    if not 0 <= level < defaults.NUM_LEVELS:
        raise InvalidInputError(f"level must be in 0..9, got {level}")
    return int(level)


def generate_tile(category: Category | str, level: int, seed: int,
                  cell_size: float = defaults.CELL_SIZE,
                  start_zone: float = defaults.START_ZONE,
                  rough_frequency: float = 1.25) -> HeightFieldTile:
    '''
    Generate one 8 m square tile of a terrain category

    Geometry runs along the tile's +x axis after a flat start zone where
    robots spawn.  Heights are stored on ``n x n`` nodes, ``n = 8 / cell_size``,
    indexed ``heights[ix, iy]``.

    :raises: InvalidInputError for a level outside 0..9 or an unknown category.
    '''
    category = Category.parse(category)
    level = _check_level(level)
    n = int(round(defaults.TILE_SIZE / cell_size))
    start_cells = int(round(start_zone / cell_size))
    k = np.arange(n) - start_cells
    active = k >= 0
    param = difficulty(category, level)
    rng = rng_from_seed(seed, category.index, level)

    profile = np.zeros(n)
    if category in (Category.STAIRS_UP, Category.STAIRS_DOWN):
        tread_cells = max(1, int(round(TREAD_WIDTH / cell_size)))
        steps = np.where(active, k // tread_cells + 1, 0)
        profile = param * steps
    elif category in (Category.PLATFORM_UP, Category.PLATFORM_DOWN):
        edges = []
        position = 0.0
        while position < defaults.TILE_SIZE:
            position += rng.uniform(*PLATFORM_WIDTH)
            edges.append(position)
        offset = k * cell_size
        segment = np.searchsorted(np.asarray(edges), offset, side='right')
        profile = np.where(active, param * (segment + 1), 0.0)
    elif category in (Category.RAMP_UP, Category.RAMP_DOWN):
        profile = np.where(active, math.tan(math.radians(param)) * k * cell_size, 0.0)

    if category in (Category.STAIRS_DOWN, Category.PLATFORM_DOWN, Category.RAMP_DOWN):
        profile = -profile

    heights = np.repeat(profile[:, None], n, axis=1).astype(np.float64)

    if category is Category.ROUGH and param > 0.0:
        coords = np.arange(n) * cell_size * rough_frequency
        xs, ys = np.meshgrid(coords, coords, indexing='ij')
        noise = perlin2d(xs, ys, rng)
        noise[~active, :] = 0.0
        peak = np.abs(noise).max()
        if peak > 0.0:
            heights = noise / peak * param

    return HeightFieldTile(category=category, level=level, cell_size=cell_size,
                           heights=heights, seed=int(seed))
