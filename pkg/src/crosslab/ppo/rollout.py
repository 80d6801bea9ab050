from __future__ import annotations

import logging

from dataclasses import dataclass
from typing import Any

import numpy as np

from crosslab.ppo.actor_critic import ActorCritic
from crosslab.ppo.buffer import RolloutBuffer, slice_state
from crosslab.sim.env import VecEnv
from crosslab.sim.reward import TERM_WEIGHTS

logger = logging.getLogger(__name__)


@dataclass
class RolloutSession:
    '''
    What carries over between rollouts: the latest observations, the
    recurrent policy state and which environments start a fresh episode
    '''
    envs: VecEnv
    obs: dict
    state: Any
    starts: np.ndarray

    @classmethod
    def start(cls, envs: VecEnv, policy: ActorCritic) -> RolloutSession:
        proprio, privileged, terrain = envs.reset()
        return cls(envs=envs, obs={'proprio': proprio, 'privileged': privileged, 'terrain': terrain},
                   state=policy.initial_state(envs.num_envs),
                   starts=np.ones(envs.num_envs, dtype=bool))


def collect_rollouts(policy: ActorCritic, envs: VecEnv, steps: int = 24, rng: np.random.Generator | None = None,
                     session: RolloutSession | None = None, deterministic: bool = False) -> RolloutBuffer:
    '''
    Step every environment ``steps`` times under ``policy``

    Environments that finish an episode are reset in place and keep
    contributing rows, so the buffer always holds ``num_envs * steps`` rows.
    Successful terminations (time-out, edge reached) bootstrap with the
    critic value of their terminal observation; falls, stuck robots and
    simulator faults bootstrap with zero.

    :return: the filled buffer; ``buffer.session`` continues the next call.
    '''
    session = session or RolloutSession.start(envs, policy)
    if rng is None:
        rng = envs.config.streams.rng('policy_init', 7)
    buffer = RolloutBuffer(num_envs=envs.num_envs, steps=steps)
    buffer.initial_state = slice_state(session.state, slice(None))
    for _ in range(steps):
        policy.begin_episodes(session.starts, envs.episode_ids)
        step = policy.act(session.obs, session.state, session.starts, rng, deterministic=deterministic)
        result = envs.step(policy.joint_targets(step.actions))
        bootstrap = np.zeros(envs.num_envs)
        for i, (status, terminal) in enumerate(zip(result.statuses, result.terminal)):
            if terminal is not None and status.success:
                bootstrap[i] = float(policy.value(terminal.proprio[None], terminal.privileged[None],
                                                  terminal.terrain[None])[0])
        terms = {name: [getattr(b, name) for b in result.breakdowns] for name in TERM_WEIGHTS}
        buffer.add(session.obs, step, result.rewards, result.dones, bootstrap, session.starts, terms)
        session.obs = {'proprio': result.proprio, 'privileged': result.privileged, 'terrain': result.terrain}
        session.state = step.state
        session.starts = result.dones.copy()
        buffer.finished.extend(result.finished)
    buffer.last_values = policy.value(session.obs['proprio'], session.obs['privileged'], session.obs['terrain'])
    buffer.session = session
    return buffer
