from __future__ import annotations

import numpy as np

from crosslab import defaults
from crosslab.terrain.tiles import Category


class TerrainCurriculum:
    '''
    Per-environment terrain assignment

    Each environment holds a (category, level).  After an episode it moves
    up a level when it walked past half the tile, and down a level when it
    covered less than half of the distance its commands asked for.
    '''

    def __init__(self, num_envs: int, categories, rng: np.random.Generator,
                 init_level: int = 0, max_level: int = defaults.NUM_LEVELS - 1, enabled: bool = True):
        self.categories = [Category.parse(c) for c in categories]
        self.max_level = max_level
        self.enabled = enabled
        self.rng = rng
        self.levels = np.full(num_envs, init_level if enabled else max_level, dtype=np.int64)
        self.assigned = [self.categories[int(i)] for i in rng.integers(0, len(self.categories), num_envs)]

    def assignment(self, env_id: int) -> tuple[Category, int]:
        return self.assigned[env_id], int(self.levels[env_id])

    def update(self, env_id: int, distance: float, commanded_distance: float,
               tile_size: float = defaults.TILE_SIZE) -> tuple[Category, int]:
        if self.enabled:
            if distance > 0.5 * tile_size:
                self.levels[env_id] = min(self.levels[env_id] + 1, self.max_level)
            elif distance < 0.5 * commanded_distance:
                self.levels[env_id] = max(self.levels[env_id] - 1, 0)
        self.assigned[env_id] = self.categories[int(self.rng.integers(0, len(self.categories)))]
        return self.assignment(env_id)

    @property
    def mean_level(self) -> float:
        return float(np.mean(self.levels))
