from __future__ import annotations

import math

from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple, Sequence

import numpy as np

from crosslab import defaults
from crosslab.exceptions import InvalidInputError
from crosslab.terrain.tiles import Category, HeightFieldTile, generate_tile

SCAN_X = np.linspace(-0.8, 0.8, defaults.SCAN_ROWS)
SCAN_Y = np.linspace(-0.5, 0.5, defaults.SCAN_COLS)
# point k of a scan is (SCAN_X[k // 11], SCAN_Y[k % 11]) in the base yaw frame
SCAN_POINTS = np.stack(np.meshgrid(SCAN_X, SCAN_Y, indexing='ij'), axis=-1).reshape(-1, 2)

_SNAP = 1e-9


class TileEdge(IntEnum):
    NONE = 0
    TILE = 1
    BORDER = 2


class Pose(NamedTuple):
    x: float
    y: float
    z: float = 0.0
    yaw: float = 0.0


@dataclass(frozen=True)
class TerrainSample:
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (defaults.TERRAIN_DIM,):
            raise InvalidInputError(f"terrain sample must hold {defaults.TERRAIN_DIM} values")

    def grid(self) -> np.ndarray:
        return self.values.reshape(defaults.SCAN_ROWS, defaults.SCAN_COLS)


@dataclass(frozen=True)
class HeightFieldWorld:
    '''
    A grid of terrain heights with its tile layout

    ``heights[ix, iy]`` is the height of the node at
    ``(origin[0] + ix * cell_size, origin[1] + iy * cell_size)``.
    Tiles are ``tiles[category][level]``: categories run along x, levels
    along y, starting at ``tile_origin``.
    '''
    heights: np.ndarray = field(repr=False)
    cell_size: float
    origin: tuple[float, float]
    tiles: tuple = field(default=(), repr=False)
    tile_origin: tuple[float, float] = (0.0, 0.0)
    tile_size: float = defaults.TILE_SIZE
    seed: int | None = None

    @classmethod
    def from_array(cls, heights, cell_size: float, origin: Sequence[float] = (0.0, 0.0)) -> HeightFieldWorld:
        heights = np.array(heights, dtype=np.float64)
        if heights.ndim != 2 or min(heights.shape) < 2:
            raise InvalidInputError("heights must be a 2D grid of at least 2x2 nodes")
        if not np.all(np.isfinite(heights)):
            raise InvalidInputError("heights must be finite")
        if cell_size <= 0:
            raise InvalidInputError("cell size must be positive")
        ox, oy = float(origin[0]), float(origin[1])
        return cls(heights=heights, cell_size=float(cell_size), origin=(ox, oy), tile_origin=(ox, oy))

    @property
    def shape(self) -> tuple[int, int]:
        return self.heights.shape  # type: ignore[return-value]

    @property
    def num_categories(self) -> int:
        return len(self.tiles)

    @property
    def num_levels(self) -> int:
        return len(self.tiles[0]) if self.tiles else 0

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        nx, ny = self.shape
        ox, oy = self.origin
        return ox, ox + (nx - 1) * self.cell_size, oy, oy + (ny - 1) * self.cell_size

    @property
    def inner_bounds(self) -> tuple[float, float, float, float]:
        if not self.tiles:
            return self.bounds
        tx, ty = self.tile_origin
        return (tx, tx + self.num_categories * self.tile_size,
                ty, ty + self.num_levels * self.tile_size)

    def tile(self, category: Category | str | int, level: int) -> HeightFieldTile:
        return self.tiles[Category.parse(category).index][level]

    def tile_corner(self, category: Category | str | int, level: int) -> tuple[float, float]:
        tx, ty = self.tile_origin
        return (tx + Category.parse(category).index * self.tile_size, ty + level * self.tile_size)

    def spawn_point(self, category: Category | str | int, level: int, start_zone: float = defaults.START_ZONE) -> tuple[float, float]:
        cx, cy = self.tile_corner(category, level)
        return cx + 0.5 * start_zone, cy + 0.5 * self.tile_size

    def tile_of(self, x: float, y: float) -> tuple[int, int] | None:
        if not self.tiles:
            return None
        x0, x1, y0, y1 = self.inner_bounds
        if not (x0 <= x < x1 and y0 <= y < y1):
            return None
        return int((x - x0) // self.tile_size), int((y - y0) // self.tile_size)

    def _fractional(self, xs, ys):
        fx = (np.asarray(xs, dtype=np.float64) - self.origin[0]) / self.cell_size
        fy = (np.asarray(ys, dtype=np.float64) - self.origin[1]) / self.cell_size
        fx = np.where(np.abs(fx - np.round(fx)) < _SNAP, np.round(fx), fx)
        fy = np.where(np.abs(fy - np.round(fy)) < _SNAP, np.round(fy), fy)
        return fx, fy

    def _bilinear(self, fx, fy):
        nx, ny = self.shape
        ix = np.clip(np.floor(fx).astype(np.int64), 0, nx - 2)
        iy = np.clip(np.floor(fy).astype(np.int64), 0, ny - 2)
        tx = fx - ix
        ty = fy - iy
        h = self.heights
        return ((1.0 - tx) * (1.0 - ty) * h[ix, iy] + tx * (1.0 - ty) * h[ix + 1, iy]
                + (1.0 - tx) * ty * h[ix, iy + 1] + tx * ty * h[ix + 1, iy + 1])

    def heights_at(self, xs, ys) -> np.ndarray:
        '''
        Vectorized bilinear heights, clamping points outside to the border
        '''
        nx, ny = self.shape
        fx, fy = self._fractional(xs, ys)
        return self._bilinear(np.clip(fx, 0.0, nx - 1), np.clip(fy, 0.0, ny - 1))

    def height_at(self, x: float, y: float) -> float:
        nx, ny = self.shape
        fx, fy = self._fractional(x, y)
        if not (np.isfinite(fx) and np.isfinite(fy)) or fx < 0 or fy < 0 or fx > nx - 1 or fy > ny - 1:
            raise InvalidInputError(f"point ({x}, {y}) is outside the world")
        return float(self._bilinear(fx, fy))


def height_at(world: HeightFieldWorld, x: float, y: float) -> float:
    '''
    Bilinear height of the four grid nodes around ``(x, y)``

    :raises: InvalidInputError when the point lies outside the padded world.
    '''
    return world.height_at(x, y)


def build_world(tile_seed: int, cell_size: float = defaults.CELL_SIZE, border: float = defaults.BORDER_WIDTH,
                start_zone: float = defaults.START_ZONE, rough_frequency: float = 1.25) -> HeightFieldWorld:
    '''
    Lay out all 8 categories x 10 levels of tiles on one padded grid

    Tile seeds derive from ``tile_seed`` per (category, level) so the same
    seed always yields the same world.
    '''
    n = int(round(defaults.TILE_SIZE / cell_size))
    pad = int(round(border / cell_size))
    categories = list(Category)
    root = np.random.SeedSequence(int(tile_seed))
    tiles = []
    heights = np.zeros((len(categories) * n + 2 * pad + 1, defaults.NUM_LEVELS * n + 2 * pad + 1))
    for c, category in enumerate(categories):
        row = []
        for level in range(defaults.NUM_LEVELS):
            seed = int(np.random.SeedSequence(root.entropy, spawn_key=(c, level)).generate_state(1)[0])
            tile = generate_tile(category, level, seed, cell_size=cell_size,
                                 start_zone=start_zone, rough_frequency=rough_frequency)
            heights[pad + c * n:pad + (c + 1) * n, pad + level * n:pad + (level + 1) * n] = tile.heights
            row.append(tile)
        tiles.append(tuple(row))
    origin = (-pad * cell_size, -pad * cell_size)
    return HeightFieldWorld(heights=heights, cell_size=cell_size, origin=origin,
                            tiles=tuple(tiles), tile_origin=(0.0, 0.0), seed=int(tile_seed))


def scan_heights(world: HeightFieldWorld, x: float, y: float, z: float, yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    px, py = SCAN_POINTS[:, 0], SCAN_POINTS[:, 1]
    wx = x + c * px - s * py
    wy = y + s * px + c * py
    return world.heights_at(wx, wy) - z


def sample_height_grid(world: HeightFieldWorld, base_pose: Sequence[float]) -> TerrainSample:
    '''
    Sample the 17 x 11 height scan around a base pose

    Points span x in [-0.8, 0.8] m and y in [-0.5, 0.5] m at 0.1 m pitch in
    the base yaw frame, ordered x-major.  Each value is terrain height minus
    base height; points past the world edge clamp to the border.

    :param base_pose: ``(x, y, z, yaw)``.
    '''
    pose = Pose(*base_pose)
    return TerrainSample(scan_heights(world, pose.x, pose.y, pose.z, pose.yaw))


def at_tile_edge(world: HeightFieldWorld, position: Sequence[float], heading: float = 0.0) -> TileEdge:
    '''
    Whether a position has reached a tile boundary

    The travel axis is the world axis closest to ``heading``.  Positions in
    the padded border report ``BORDER``; positions within one cell of a tile
    boundary along the travel axis report ``TILE``.
    '''
    x, y = float(position[0]), float(position[1])
    eps = world.cell_size + _SNAP
    x0, x1, y0, y1 = world.inner_bounds
    if not world.tiles:
        if x - x0 <= eps or x1 - x <= eps or y - y0 <= eps or y1 - y <= eps:
            return TileEdge.BORDER
        return TileEdge.NONE
    if x < x0 or x > x1 or y < y0 or y > y1:
        return TileEdge.BORDER
    along_x = abs(math.cos(heading)) >= abs(math.sin(heading))
    local = (x - x0) if along_x else (y - y0)
    u = math.fmod(local, world.tile_size)
    if min(u, world.tile_size - u) <= eps:
        return TileEdge.TILE
    return TileEdge.NONE
