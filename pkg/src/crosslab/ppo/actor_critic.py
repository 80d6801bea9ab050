from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from crosslab import defaults
from crosslab.net import tensor as T
from crosslab.net.distributions import log_prob, sample
from crosslab.net.layers import Network
from crosslab.sim.kinematics import NOMINAL_JOINTS


@dataclass
class PolicyStep:
    actions: np.ndarray
    log_probs: np.ndarray
    values: np.ndarray
    mean: np.ndarray
    log_std: np.ndarray
    state: Any = None
    extras: dict = field(default_factory=dict)


class ActorCritic:
    '''
    Base class of every trainable policy

    A subclass provides ``networks`` (including a ``log_std`` vector and a
    ``critic`` MLP over the 236-value critic input), names the networks PPO
    may change in ``trainable`` and implements :py:meth:`forward` on
    time-major batches.  The same ``forward`` serves acting (one step, plain
    arrays) and training (whole sequences, watched tensors).
    '''

    recurrent = False

    def __init__(self, networks: dict[str, Network], trainable: tuple[str, ...], action_scale: float = 0.25):
        self.networks = networks
        self.trainable = tuple(trainable)
        self.action_scale = action_scale

    # recurrent state

    def initial_state(self, num_envs: int) -> Any:
        return None

    def begin_episodes(self, starts: np.ndarray, episode_ids: np.ndarray) -> None:
        '''
        Hook called before acting with the environments that start a new episode
        '''

    def step_extras(self, obs: dict, starts: np.ndarray) -> dict:
        '''
        Per-step inputs beyond the observations that ``forward`` needs again at training time
        '''
        return {}

    # parameters

    @property
    def params(self) -> dict[str, dict[str, np.ndarray]]:
        return {name: net.params for name, net in self.networks.items()}

    def parameters(self) -> dict[str, np.ndarray]:
        return {f"{net}/{name}": value
                for net in self.trainable for name, value in self.networks[net].params.items()}

    def bind(self, tape: T.GradientTape) -> dict[str, dict[str, Any]]:
        bound = dict(self.params)
        for net in self.trainable:
            bound[net] = tape.watch_all(self.networks[net].params, prefix=f"{net}/")
        return bound

    @staticmethod
    def sources(bound: dict[str, dict[str, Any]], trainable) -> dict[str, T.Tensor]:
        return {f"{net}/{name}": value for net in trainable for name, value in bound[net].items()}

    def clamp_std(self, min_std: float) -> None:
        log_std = self.networks['log_std'].params['value']
        np.maximum(log_std, math.log(min_std), out=log_std)

    # evaluation

    def forward(self, params, batch: dict, state: Any, masks) -> tuple[Any, Any]:
        '''
        Action mean of shape (T, B, 12) and the recurrent state after the batch
        '''
        raise NotImplementedError

    def advance_state(self, batch: dict, state: Any, masks, new_state: Any) -> Any:
        '''
        Recurrent state to carry after acting; ``new_state`` is what ``forward`` returned
        '''
        return new_state

    def auxiliary_loss(self, params, batch: dict, state: Any, masks) -> Any:
        return None

    def critic_value(self, params, proprio, privileged, terrain):
        x = T.concat([proprio, privileged, terrain], axis=-1)
        out = self.networks['critic'](x, bound=params['critic'])
        return T.reshape(out, np.shape(T.value_of(out))[:-1])

    def value(self, proprio, privileged, terrain) -> np.ndarray:
        return self.critic_value(self.params, proprio, privileged, terrain)

    def act(self, obs: dict, state: Any, starts: np.ndarray, rng: np.random.Generator | None,
            deterministic: bool = False) -> PolicyStep:
        '''
        Sample one action per environment

        :param obs: ``proprio``, ``privileged`` and ``terrain`` arrays, one row per environment.
        :param starts: environments whose episode starts at this step.
        '''
        extras = self.step_extras(obs, starts)
        batch = {name: np.asarray(value)[None] for name, value in {**obs, **extras}.items()}
        masks = (~np.asarray(starts, dtype=bool)).astype(np.float64)[None]
        mean, new_state = self.forward(self.params, batch, state, masks)
        state = self.advance_state(batch, state, masks, new_state)
        mean = mean[0]
        log_std = np.broadcast_to(self.networks['log_std'].params['value'], mean.shape).copy()
        actions = mean.copy() if deterministic else sample(mean, log_std, rng)
        return PolicyStep(
            actions=actions,
            log_probs=log_prob(mean, log_std, actions),
            values=self.value(obs['proprio'], obs['privileged'], obs['terrain']),
            mean=mean,
            log_std=log_std,
            state=state,
            extras=extras,
        )

    def deploy_forward(self, batch: dict, state: Any, masks) -> tuple[Any, Any]:
        '''
        Action mean as used at deployment; only the deploy policy drops inputs here
        '''
        return self.forward(self.params, batch, state, masks)

    def joint_targets(self, actions: np.ndarray) -> np.ndarray:
        return NOMINAL_JOINTS + self.action_scale * np.asarray(actions)

    @property
    def actor_input_size(self) -> int:
        return defaults.ACTOR_INPUT_DIM
