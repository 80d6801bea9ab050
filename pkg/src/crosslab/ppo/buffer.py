from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from crosslab import defaults
from crosslab.exceptions import InvalidInputError

OBS_DIMS = {
    'proprio': defaults.PROPRIO_DIM,
    'privileged': defaults.PRIVILEGED_DIM,
    'terrain': defaults.TERRAIN_DIM,
}


def slice_state(state: Any, index) -> Any:
    '''
    Index every array of a nested recurrent state along its batch axis
    '''
    if state is None:
        return None
    if isinstance(state, (tuple, list)):
        return type(state)(slice_state(s, index) for s in state)
    return np.asarray(state)[index]


@dataclass
class RolloutBuffer:
    '''
    Fixed-horizon rollout storage, time-major ``(steps, num_envs, ...)``

    ``bootstrap`` holds the critic value of the terminal state for steps
    that ended in a successful termination and zero elsewhere.
    ``episode_starts[t]`` marks the first step of an episode.
    '''
    num_envs: int
    steps: int = 24
    obs: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    actions: np.ndarray | None = None
    log_probs: np.ndarray | None = None
    means: np.ndarray | None = None
    log_stds: np.ndarray | None = None
    values: np.ndarray | None = None
    rewards: np.ndarray | None = None
    dones: np.ndarray | None = None
    bootstrap: np.ndarray | None = None
    episode_starts: np.ndarray | None = None
    last_values: np.ndarray | None = None
    initial_state: Any = None
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None
    reward_terms: dict = field(default_factory=dict)
    finished: list = field(default_factory=list)
    cursor: int = 0
    session: Any = None

    def __post_init__(self):
        if self.steps < 1 or self.num_envs < 1:
            raise InvalidInputError("a rollout buffer needs at least one step and one environment")
        shape = (self.steps, self.num_envs)
        for name, dim in OBS_DIMS.items():
            self.obs.setdefault(name, np.zeros(shape + (dim,)))
        for name in ('log_probs', 'values', 'rewards', 'bootstrap'):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(shape))
        for name in ('actions', 'means', 'log_stds'):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(shape + (defaults.ACTION_DIM,)))
        if self.dones is None:
            self.dones = np.zeros(shape, dtype=bool)
        if self.episode_starts is None:
            self.episode_starts = np.zeros(shape, dtype=bool)
        if self.last_values is None:
            self.last_values = np.zeros(self.num_envs)

    def __len__(self) -> int:
        return self.steps * self.num_envs

    @property
    def full(self) -> bool:
        return self.cursor == self.steps

    def add(self, obs: dict, step, rewards, dones, bootstrap, episode_starts, reward_terms: dict | None = None) -> None:
        t = self.cursor
        if t >= self.steps:
            raise InvalidInputError("rollout buffer is full")
        for name, value in obs.items():
            self.obs[name][t] = value
        for name, value in step.extras.items():
            if name not in self.extras:
                self.extras[name] = np.zeros((self.steps,) + np.shape(value), dtype=np.asarray(value).dtype)
            self.extras[name][t] = value
        self.actions[t] = step.actions
        self.log_probs[t] = step.log_probs
        self.means[t] = step.mean
        self.log_stds[t] = step.log_std
        self.values[t] = step.values
        self.rewards[t] = rewards
        self.dones[t] = dones
        self.bootstrap[t] = bootstrap
        self.episode_starts[t] = episode_starts
        for name, value in (reward_terms or {}).items():
            self.reward_terms[name] = self.reward_terms.get(name, 0.0) + float(np.sum(value))
        self.cursor += 1

    def batch(self, env_index) -> dict:
        '''
        Observation and extras arrays of a subset of environments, time-major
        '''
        data = {name: value[:, env_index] for name, value in self.obs.items()}
        data.update({name: value[:, env_index] for name, value in self.extras.items()})
        return data

    def minibatches(self, num_minibatches: int, rng: np.random.Generator):
        '''
        Split environments into ``num_minibatches`` groups of whole sequences

        Yields ``(env_index, flat)`` where ``flat`` holds the per-sample
        training targets flattened time-major over the selected environments.
        '''
        groups = min(num_minibatches, self.num_envs)
        order = rng.permutation(self.num_envs)
        for env_index in np.array_split(order, groups):
            env_index = np.sort(env_index)
            flat = {}
            for name in ('actions', 'log_probs', 'means', 'log_stds', 'advantages', 'returns', 'values'):
                arr = getattr(self, name)
                if arr is not None:
                    part = arr[:, env_index]
                    flat[name] = part.reshape((-1,) + part.shape[2:])
            yield env_index, flat


def gae(rewards, values, dones, last_values, gamma: float = 0.99, lam: float = 0.95, bootstrap=None):
    '''
    Generalized advantage estimation over time-major arrays

    A done step does not look past itself; a non-zero ``bootstrap`` entry
    adds ``gamma * bootstrap`` to that step's reward, standing in for the
    value of the state the episode was cut off in.

    :return: ``(advantages, returns)`` with ``returns = advantages + values``.
    '''
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    steps = rewards.shape[0]
    if bootstrap is not None:
        rewards = rewards + gamma * np.asarray(bootstrap, dtype=np.float64)
    advantages = np.zeros_like(rewards)
    running = np.zeros_like(rewards[0])
    next_values = np.asarray(last_values, dtype=np.float64)
    for t in reversed(range(steps)):
        not_done = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_values * not_done - values[t]
        running = delta + gamma * lam * not_done * running
        advantages[t] = running
        next_values = values[t]
    return advantages, advantages + values


def compute_gae(buffer: RolloutBuffer, gamma: float = 0.99, lam: float = 0.95):
    if not buffer.full:
        raise InvalidInputError(f"rollout buffer holds {buffer.cursor} of {buffer.steps} steps")
    buffer.advantages, buffer.returns = gae(buffer.rewards, buffer.values, buffer.dones,
                                            buffer.last_values, gamma, lam, buffer.bootstrap)
    return buffer.advantages, buffer.returns


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    advantages = np.asarray(advantages, dtype=np.float64)
    return (advantages - advantages.mean()) / (advantages.std() + 1e-8)
