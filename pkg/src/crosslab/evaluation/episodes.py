from __future__ import annotations

import logging

from collections import Counter
from collections.abc import Sequence

import numpy as np

from crosslab.evaluation.records import EpisodeRecord
from crosslab.sim.env import VecEnv
from crosslab.sim.kinematics import NOMINAL_JOINTS
from crosslab.terrain.tiles import Category
from crosslab.terrain.world import HeightFieldWorld

logger = logging.getLogger(__name__)


class FixedTerrainSet:
    '''
    Drop-in for the curriculum that walks a fixed list of tiles

    Episode ``k`` (counted over all environments in env order) runs on
    ``tiles[k % len(tiles)]``.
    '''

    def __init__(self, tiles: Sequence[tuple[Category | str, int]], num_envs: int):
        if not tiles:
            raise ValueError("terrain set must not be empty")
        self.tiles = [(Category.parse(c), int(level)) for c, level in tiles]
        self.assigned = [self.tiles[i % len(self.tiles)] for i in range(num_envs)]
        self.issued = num_envs

    def assignment(self, env_id: int) -> tuple[Category, int]:
        return self.assigned[env_id]

    def update(self, env_id: int, distance: float, commanded_distance: float, tile_size: float = 8.0):
        self.assigned[env_id] = self.tiles[self.issued % len(self.tiles)]
        self.issued += 1
        return self.assigned[env_id]

    @property
    def mean_level(self) -> float:
        return float(np.mean([level for _, level in self.assigned]))


class StandStillAgent:
    '''
    Holds the nominal standing pose whatever it observes
    '''

    def act(self, obs: dict, starts) -> np.ndarray:
        return np.tile(NOMINAL_JOINTS, (len(obs['proprio']), 1))


def run_episodes(agent, world: HeightFieldWorld, config, tiles: Sequence[tuple[Category | str, int]],
                 episodes: int) -> list[EpisodeRecord]:
    '''
    Run exactly ``episodes`` complete episodes and return their records

    Records come back sorted by ``(env_id, seed)``, so the result does not
    depend on which environment happened to finish first.

    :param agent: anything with ``act(obs, starts) -> joint targets``.
    '''
    num_envs = max(1, min(config.env.num_envs, episodes))
    records: list[EpisodeRecord] = []
    tileset = FixedTerrainSet(tiles, num_envs)
    with VecEnv(world, config, num_envs=num_envs, curriculum=tileset) as envs:
        proprio, privileged, terrain = envs.reset()
        starts = np.ones(num_envs, dtype=bool)
        active = np.ones(num_envs, dtype=bool)
        started = num_envs
        if hasattr(agent, 'reset'):
            agent.reset(num_envs)
        while active.any():
            obs = {'proprio': proprio, 'privileged': privileged, 'terrain': terrain}
            result = envs.step(agent.act(obs, starts))
            for env_id, record in zip(np.flatnonzero(result.dones), result.finished):
                if active[env_id]:
                    records.append(record)
                    if started < episodes:
                        started += 1
                    else:
                        active[env_id] = False
            proprio, privileged, terrain = result.proprio, result.privileged, result.terrain
            starts = result.dones
    records.sort(key=lambda r: (r.env_id, r.seed))
    return records[:episodes]


def tally(records: Sequence[EpisodeRecord]) -> Counter:
    '''
    Episode count per outcome status plus a ``success`` total
    '''
    counts = Counter(r.status for r in records)
    counts['success'] = sum(1 for r in records if r.success)
    return counts


def success_rate(policy, tiles: Sequence[tuple[Category | str, int]], episodes: int, config,
                 world: HeightFieldWorld | None = None) -> float:
    '''
    Fraction of episodes ending in time-out or edge reached
    '''
    if world is None:
        from crosslab.pas.training import make_world  # pylint: disable=C0415
        world = make_world(config)
    records = run_episodes(policy, world, config, tiles, episodes)
    return tally(records)['success'] / len(records)
