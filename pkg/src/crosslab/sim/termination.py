from __future__ import annotations

import math

from collections.abc import Sequence
from enum import Enum

from crosslab import defaults
from crosslab.sim.robot import RobotState
from crosslab.terrain.world import HeightFieldWorld, TileEdge, at_tile_edge


class Status(Enum):
    RUNNING = 'running'
    FALL_ROLL = 'fall_roll'
    FALL_PITCH = 'fall_pitch'
    STUCK = 'stuck'
    TIMEOUT = 'timeout'
    EDGE_REACHED = 'edge_reached'
    FAULT = 'fault'

    @property
    def done(self) -> bool:
        return self is not Status.RUNNING

    @property
    def success(self) -> bool:
        return self in (Status.TIMEOUT, Status.EDGE_REACHED)


def check_termination(state: RobotState, position_history: Sequence[tuple[float, float, float]], t: float,
                      world: HeightFieldWorld | None = None, heading: float = 0.0,
                      fall_roll: float = 0.8, fall_pitch: float = 1.0,
                      episode_seconds: float = defaults.EPISODE_SECONDS,
                      stuck_enabled: bool = True, stuck_distance: float = 0.05,
                      stuck_window: float = 1.0) -> Status:
    '''
    Classify the episode after a control step

    Checks run in a fixed order: roll, pitch, tile edge, time-out, stuck.
    Stuck needs a position history of ``(t, x, y)`` entries reaching back at
    least ``stuck_window`` seconds and compares the current position with
    the entry that far back.

    :param heading: world-frame travel direction used for the edge test.
    '''
    roll, pitch, _ = state.euler
    if abs(roll) > fall_roll:
        return Status.FALL_ROLL
    if abs(pitch) > fall_pitch:
        return Status.FALL_PITCH
    if world is not None and at_tile_edge(world, state.position[:2], heading) is not TileEdge.NONE:
        return Status.EDGE_REACHED
    if t >= episode_seconds - 1e-9:
        return Status.TIMEOUT
    if stuck_enabled and position_history:
        horizon = t - stuck_window + 1e-9
        if position_history[0][0] <= horizon:
            past = None
            for entry in reversed(position_history):
                if entry[0] <= horizon:
                    past = entry
                    break
            x, y = state.position[0], state.position[1]
            if math.hypot(x - past[1], y - past[2]) < stuck_distance:
                return Status.STUCK
    return Status.RUNNING


def termination_options(env_config) -> dict:
    return {
        'fall_roll': env_config.fall_roll,
        'fall_pitch': env_config.fall_pitch,
        'episode_seconds': env_config.episode_seconds,
        'stuck_enabled': env_config.stuck_enabled,
        'stuck_distance': env_config.stuck_distance,
        'stuck_window': env_config.stuck_window,
    }
