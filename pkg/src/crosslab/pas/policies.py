from __future__ import annotations

import math

from typing import Any

import numpy as np

from crosslab import defaults
from crosslab.exceptions import InvalidInputError
from crosslab.net import tensor as T
from crosslab.net.layers import Network, NetworkSpec, build_network, forward_lstm, lstm_zero_state
from crosslab.pas.selection import selection_draw
from crosslab.ppo.actor_critic import ActorCritic
from crosslab.utils.seeding import stream_key


def network_specs(net_config, init_std: float = 1.0, rma_window: int = 50) -> dict[str, NetworkSpec]:
    '''
    Every network any policy kind may use, keyed by role
    '''
    act = net_config.activation
    lstm_out = net_config.estimator_lstm[-1]
    return {
        'terrain_encoder': NetworkSpec('mlp', defaults.TERRAIN_DIM, defaults.TERRAIN_LATENT_DIM,
                                       hidden=net_config.terrain_encoder, activation=act),
        'low_level': NetworkSpec('mlp', defaults.ACTOR_INPUT_DIM, defaults.ACTION_DIM,
                                 hidden=net_config.low_level, activation=act, output_gain=0.01),
        'critic': NetworkSpec('mlp', defaults.CRITIC_INPUT_DIM, 1, hidden=net_config.critic, activation=act),
        'estimator': NetworkSpec('lstm', defaults.PROPRIO_DIM, lstm_out, hidden=net_config.estimator_lstm),
        'estimator_head': NetworkSpec('mlp', lstm_out, defaults.LATENT_DIM,
                                      hidden=net_config.estimator_mlp, activation=act),
        'log_std': NetworkSpec('vector', 0, defaults.ACTION_DIM, init_value=math.log(init_std)),
        'blind_low_level': NetworkSpec('mlp', defaults.PROPRIO_DIM, defaults.ACTION_DIM,
                                       hidden=net_config.low_level, activation=act, output_gain=0.01),
        'concurrent_head': NetworkSpec('mlp', lstm_out, defaults.PRIVILEGED_DIM,
                                       hidden=net_config.estimator_mlp, activation=act),
        'concurrent_low_level': NetworkSpec('mlp', defaults.PROPRIO_DIM + defaults.PRIVILEGED_DIM,
                                            defaults.ACTION_DIM, hidden=net_config.low_level,
                                            activation=act, output_gain=0.01),
        'adaptation': NetworkSpec('conv1d', defaults.PROPRIO_DIM, defaults.LATENT_DIM,
                                  hidden=net_config.adaptation_channels, activation=act, window=rma_window,
                                  kernels=net_config.adaptation_kernels, strides=net_config.adaptation_strides),
    }


def build_networks(specs: dict[str, NetworkSpec], names, streams) -> dict[str, Network]:
    return {name: build_network(specs[name], streams.seed('policy_init', stream_key(name))) for name in names}


def estimate(networks, params, proprio, state, masks, head: str = 'estimator_head'):
    '''
    Run the LSTM estimator and its MLP head over a (T, B, 45) proprioception sequence
    '''
    hidden, state = forward_lstm(networks['estimator'], proprio, state, params['estimator'], masks)
    return networks[head](hidden, bound=params[head]), state


class OraclePolicy(ActorCritic):
    '''
    Low-level policy fed the true latent: encoded terrain scan plus privileged state

    An LSTM estimator learns to predict that latent from proprioception
    alone, trained concurrently by regression.
    '''

    recurrent = True
    NETWORKS = ('terrain_encoder', 'low_level', 'critic', 'estimator', 'estimator_head', 'log_std')

    def __init__(self, networks: dict[str, Network], action_scale: float = 0.25):
        super().__init__(networks, trainable=self.NETWORKS, action_scale=action_scale)

    def initial_state(self, num_envs: int) -> Any:
        return lstm_zero_state(self.networks['estimator'], num_envs)

    def true_latent(self, params, terrain, privileged):
        encoded = self.networks['terrain_encoder'](terrain, bound=params['terrain_encoder'])
        return T.concat([encoded, privileged], axis=-1)

    def forward(self, params, batch, state, masks):
        latent = self.true_latent(params, batch['terrain'], batch['privileged'])
        mean = self.networks['low_level'](T.concat([batch['proprio'], latent], axis=-1), bound=params['low_level'])
        return mean, state

    def advance_state(self, batch, state, masks, new_state):
        _, state = estimate(self.networks, self.params, batch['proprio'], state, masks)
        return state

    def auxiliary_loss(self, params, batch, state, masks):
        predicted, _ = estimate(self.networks, params, batch['proprio'], state, masks)
        target = T.value_of(self.true_latent(params, batch['terrain'], batch['privileged']))
        return T.mean(T.square(T.sub(predicted, target)))


class DeployPolicy(ActorCritic):
    '''
    Low-level policy fed either the estimator prediction or the true latent

    The source is drawn once per episode and environment with the current
    anneal probability.  The terrain encoder stays frozen; everything on the
    prediction path keeps training under the PPO loss.
    '''

    recurrent = True
    NETWORKS = ('terrain_encoder', 'low_level', 'critic', 'estimator', 'estimator_head', 'log_std')
    TRAINABLE = ('low_level', 'critic', 'estimator', 'estimator_head', 'log_std')

    def __init__(self, networks: dict[str, Network], streams=None, probability: float = 0.0,
                 action_scale: float = 0.25):
        super().__init__(networks, trainable=self.TRAINABLE, action_scale=action_scale)
        self.streams = streams
        self.probability = probability
        self.use_true = np.zeros(0, dtype=bool)

    @classmethod
    def from_oracle(cls, oracle: dict[str, Network], streams=None, probability: float = 1.0,
                    action_scale: float = 0.25) -> DeployPolicy:
        return cls({name: oracle[name].copy() for name in cls.NETWORKS}, streams, probability, action_scale)

    def initial_state(self, num_envs: int) -> Any:
        self.use_true = np.zeros(num_envs, dtype=bool)
        return lstm_zero_state(self.networks['estimator'], num_envs)

    def begin_episodes(self, starts, episode_ids) -> None:
        if self.use_true.shape != np.shape(starts):
            self.use_true = np.zeros(np.shape(starts), dtype=bool)
        for env_id in np.flatnonzero(starts):
            seed = self.streams.seed('selection', int(env_id), int(episode_ids[env_id]))
            self.use_true[env_id] = selection_draw(self.probability, int(env_id), seed)

    def step_extras(self, obs, starts) -> dict:
        return {'use_true': self.use_true.astype(np.float64)}

    def true_latent(self, params, terrain, privileged):
        encoded = self.networks['terrain_encoder'](terrain, bound=params['terrain_encoder'])
        return T.concat([encoded, privileged], axis=-1)

    def forward(self, params, batch, state, masks):
        predicted, state = estimate(self.networks, params, batch['proprio'], state, masks)
        use_true = np.asarray(batch['use_true'], dtype=np.float64)[..., None]
        if np.any(use_true):
            true = T.value_of(self.true_latent(params, batch['terrain'], batch['privileged']))
            latent = T.add(T.mul(predicted, 1.0 - use_true), true * use_true)
        else:
            latent = predicted
        mean = self.networks['low_level'](T.concat([batch['proprio'], latent], axis=-1), bound=params['low_level'])
        return mean, state

    def deploy_forward(self, batch, state, masks):
        '''
        The deployment path: proprioception in, action mean out
        '''
        predicted, state = estimate(self.networks, self.params, batch['proprio'], state, masks)
        mean = self.networks['low_level'](np.concatenate([batch['proprio'], predicted], axis=-1))
        return mean, state

    def imitation_loss(self, params, batch, state, masks, oracle_mean):
        mean, _ = self.forward(params, batch, state, masks)
        return T.mean(T.square(T.sub(mean, oracle_mean)))


class BlindPolicy(ActorCritic):
    '''
    Proprioception straight into the low-level MLP
    '''

    NETWORKS = ('blind_low_level', 'critic', 'log_std')

    def __init__(self, networks: dict[str, Network], action_scale: float = 0.25):
        super().__init__(networks, trainable=self.NETWORKS, action_scale=action_scale)

    def forward(self, params, batch, state, masks):
        return self.networks['blind_low_level'](batch['proprio'], bound=params['blind_low_level']), state


class ConcurrentPolicy(ActorCritic):
    '''
    Proprioception plus an LSTM estimate of the privileged state, trained together
    '''

    recurrent = True
    NETWORKS = ('estimator', 'concurrent_head', 'concurrent_low_level', 'critic', 'log_std')

    def __init__(self, networks: dict[str, Network], action_scale: float = 0.25):
        super().__init__(networks, trainable=self.NETWORKS, action_scale=action_scale)

    def initial_state(self, num_envs: int) -> Any:
        return lstm_zero_state(self.networks['estimator'], num_envs)

    def forward(self, params, batch, state, masks):
        predicted, state = estimate(self.networks, params, batch['proprio'], state, masks, head='concurrent_head')
        x = T.concat([batch['proprio'], predicted], axis=-1)
        return self.networks['concurrent_low_level'](x, bound=params['concurrent_low_level']), state

    def auxiliary_loss(self, params, batch, state, masks):
        predicted, _ = estimate(self.networks, params, batch['proprio'], state, masks, head='concurrent_head')
        return T.mean(T.square(T.sub(predicted, batch['privileged'])))


class RMAPolicy(ActorCritic):
    '''
    A 1D convolution over the last ``window`` proprioception frames regresses
    the latent for a frozen oracle low-level policy
    '''

    NETWORKS = ('adaptation', 'low_level', 'critic', 'log_std')

    def __init__(self, networks: dict[str, Network], action_scale: float = 0.25):
        super().__init__(networks, trainable=('adaptation',), action_scale=action_scale)
        self.window = networks['adaptation'].spec.window
        self.history = np.zeros((0, self.window, defaults.PROPRIO_DIM))

    def initial_state(self, num_envs: int) -> Any:
        self.history = np.zeros((num_envs, self.window, defaults.PROPRIO_DIM))
        return None

    def step_extras(self, obs, starts) -> dict:
        proprio = np.asarray(obs['proprio'])
        if self.history.shape[0] != proprio.shape[0]:
            self.history = np.zeros((proprio.shape[0], self.window, defaults.PROPRIO_DIM))
        self.history[np.asarray(starts, dtype=bool)] = 0.0
        self.history = np.concatenate([self.history[:, 1:], proprio[:, None]], axis=1)
        return {'history': self.history.copy()}

    def adapt(self, params, history):
        shape = np.shape(T.value_of(history))
        frames = T.reshape(history, (-1, self.window, defaults.PROPRIO_DIM))
        latent = self.networks['adaptation'](frames, bound=params['adaptation'])
        return T.reshape(latent, shape[:-2] + (defaults.LATENT_DIM,))

    def forward(self, params, batch, state, masks):
        latent = self.adapt(params, batch['history'])
        x = T.concat([batch['proprio'], latent], axis=-1)
        return self.networks['low_level'](x, bound=params['low_level']), state


POLICY_KINDS = {
    'oracle': OraclePolicy,
    'deploy': DeployPolicy,
    'blind': BlindPolicy,
    'concurrent': ConcurrentPolicy,
    'il': DeployPolicy,
    'rma': RMAPolicy,
}


def policy_from_networks(kind: str, networks: dict[str, Network], streams=None,
                         action_scale: float = 0.25) -> ActorCritic:
    '''
    Rebuild a policy of ``kind`` around loaded networks

    :raises: InvalidInputError for an unknown kind or missing networks.
    '''
    cls = POLICY_KINDS.get(kind)
    if cls is None:
        raise InvalidInputError(f"unknown policy kind {kind!r}")
    missing = [name for name in cls.NETWORKS if name not in networks]
    if missing:
        raise InvalidInputError(f"{kind} policy needs networks {missing}")
    picked = {name: networks[name] for name in cls.NETWORKS}
    if cls is DeployPolicy:
        return DeployPolicy(picked, streams, 0.0, action_scale)
    return cls(picked, action_scale=action_scale)
