from __future__ import annotations

import math

from dataclasses import dataclass, field

import numpy as np

from crosslab.exceptions import InvalidInputError

SUCCESS_STATUSES = ('timeout', 'edge_reached')
STATUSES = ('running', 'fall_roll', 'fall_pitch', 'stuck', 'timeout', 'edge_reached', 'fault')
EPISODE_COLUMNS = (
    'env_id', 'category', 'level', 'seed', 'status', 'success', 'steps', 'duration',
    'distance', 'lin_tracking', 'ang_tracking',
)
TRACKING_SCALE = 0.25


@dataclass
class EpisodeRecord:
    '''
    Outcome of one episode with its per-step commanded and realized velocities

    Velocities are ``(vx, vy, wz)`` triples in the base frame.
    '''
    env_id: int
    category: str
    level: int
    seed: int
    status: str = 'running'
    duration: float = 0.0
    distance: float = 0.0
    commanded: list = field(default_factory=list)
    realized: list = field(default_factory=list)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise InvalidInputError(f"unknown episode status {self.status!r}")

    def record_step(self, command, velocity) -> None:
        self.commanded.append(tuple(float(v) for v in command))
        self.realized.append(tuple(float(v) for v in velocity))

    def finish(self, status: str, duration: float, distance: float) -> None:
        if status not in STATUSES:
            raise InvalidInputError(f"unknown episode status {status!r}")
        self.status = status
        self.duration = float(duration)
        self.distance = float(distance)

    @property
    def success(self) -> bool:
        return self.status in SUCCESS_STATUSES

    @property
    def steps(self) -> int:
        return len(self.commanded)

    def row(self) -> tuple:
        lin, ang = tracking_ratios(self) if self.steps else (math.nan, math.nan)
        return (self.env_id, self.category, self.level, self.seed, self.status, int(self.success),
                self.steps, self.duration, self.distance, lin, ang)


def tracking_ratios(episode: EpisodeRecord) -> tuple[float, float]:
    '''
    Mean per-step linear and angular velocity tracking ratios

    Per step the linear ratio is ``exp(-|v_xy - v_xy_target|^2 / 0.25)`` and
    the angular ratio ``exp(-(w_z - w_z_target)^2 / 0.25)``.

    :raises: InvalidInputError for an episode without steps.
    '''
    if not episode.commanded:
        raise InvalidInputError("episode has no steps")
    commanded = np.asarray(episode.commanded, dtype=np.float64)
    realized = np.asarray(episode.realized, dtype=np.float64)
    lin_err = np.sum((realized[:, :2] - commanded[:, :2]) ** 2, axis=1)
    ang_err = (realized[:, 2] - commanded[:, 2]) ** 2
    return float(np.mean(np.exp(-lin_err / TRACKING_SCALE))), float(np.mean(np.exp(-ang_err / TRACKING_SCALE)))
