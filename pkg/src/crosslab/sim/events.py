from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from crosslab import defaults


@dataclass(frozen=True)
class Event:
    kind: str
    payload: tuple


def _fires(t: float, interval: float) -> bool:
    k = round(t / interval)
    return k >= 1 and abs(t - k * interval) < 0.5 * defaults.CONTROL_DT


def sample_command(rng: np.random.Generator, env_config) -> np.ndarray:
    return np.array([
        rng.uniform(*env_config.lin_vel_x),
        rng.uniform(*env_config.lin_vel_y),
        rng.uniform(*env_config.ang_vel_z),
    ])


def schedule_events(t: float, rng: np.random.Generator, env_config,
                    push_rng: np.random.Generator | None = None) -> list[Event]:
    '''
    Events due at episode time ``t``

    A ``command`` event carries a fresh ``(vx, vy, wz)`` every
    ``command_interval`` seconds, drawn from ``rng``; a ``push`` event carries
    a horizontal base velocity kick of ``push_velocity`` in a uniform random
    direction every ``push_interval`` seconds, drawn from ``push_rng`` (``rng``
    when not given).
    '''
    if push_rng is None:
        push_rng = rng
    events = []
    if _fires(t, env_config.command_interval):
        events.append(Event('command', tuple(sample_command(rng, env_config))))
    if _fires(t, env_config.push_interval):
        angle = push_rng.uniform(-math.pi, math.pi)
        v = env_config.push_velocity
        events.append(Event('push', (v * math.cos(angle), v * math.sin(angle), 0.0)))
    return events
