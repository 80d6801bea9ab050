from __future__ import annotations

import logging
import math

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from crosslab.exceptions import TrainingDivergence
from crosslab.net.checkpoint import save_checkpoint
from crosslab.net.layers import Network
from crosslab.ppo.actor_critic import ActorCritic
from crosslab.ppo.algorithm import PPO
from crosslab.ppo.buffer import RolloutBuffer, compute_gae
from crosslab.ppo.rollout import collect_rollouts
from crosslab.sim.env import VecEnv
from crosslab.sim.reward import TERM_WEIGHTS
from crosslab.terrain.world import HeightFieldWorld, build_world

logger = logging.getLogger(__name__)

METRIC_COLUMNS = (
    'iteration', 'mean_reward', *(f"reward_{name}" for name in TERM_WEIGHTS),
    'mean_episode_length', 'episodes', 'success_rate', 'mean_level',
    'policy_loss', 'value_loss', 'entropy', 'aux_loss', 'kl', 'learning_rate',
    'anneal_probability', 'faults',
)


@dataclass
class TrainingResult:
    stage: str
    networks: dict[str, Network]
    rows: list = field(default_factory=list)
    episodes: list = field(default_factory=list)
    checkpoint: str | None = None
    canceled: bool = False
    meta: dict = field(default_factory=dict)
    columns: tuple = METRIC_COLUMNS


def make_world(config) -> HeightFieldWorld:
    terrain = config.terrain
    return build_world(config.streams.seed('terrain'), cell_size=terrain.cell_size, border=terrain.border,
                       start_zone=terrain.start_zone, rough_frequency=terrain.rough_frequency)


def snapshot(networks: dict[str, Network]) -> dict[str, Network]:
    return {name: net.copy() for name, net in networks.items()}


def restore(networks: dict[str, Network], saved: dict[str, Network]) -> None:
    for name, net in networks.items():
        for key, value in saved[name].params.items():
            net.params[key][...] = value


def finite_networks(networks: dict[str, Network]) -> bool:
    return all(np.all(np.isfinite(p)) for net in networks.values() for p in net.params.values())


def rollout_stats(buffer: RolloutBuffer, envs: VecEnv) -> dict:
    '''
    Reward and episode statistics of one rollout, in a fixed reduction order
    '''
    finished = buffer.finished
    row = {
        'mean_reward': float(np.mean(buffer.rewards)),
        'episodes': len(finished),
        'mean_level': envs.curriculum.mean_level,
        'faults': sum(1 for r in finished if r.status == 'fault'),
    }
    for name in TERM_WEIGHTS:
        row[f"reward_{name}"] = buffer.reward_terms.get(name, 0.0) / len(buffer)
    if finished:
        row['mean_episode_length'] = float(np.mean([r.duration for r in finished]))
        row['success_rate'] = float(np.mean([r.success for r in finished]))
    else:
        row['mean_episode_length'] = math.nan
        row['success_rate'] = math.nan
    return row


def run_ppo(policy: ActorCritic, envs: VecEnv, config, iterations: int, stage: str,
            probability_fn: Callable[[int], float] | None = None,
            on_iteration: Callable[[dict], None] | None = None,
            cancel: Callable[[], bool] | None = None,
            checkpoint_dir: str | None = None, meta: dict | None = None) -> TrainingResult:
    '''
    PPO training loop shared by the oracle, deploy and one-stage baselines

    After every iteration the networks are snapshotted; when an iteration
    yields a non-finite reward, loss or parameter the snapshot is restored,
    written as the checkpoint (if ``checkpoint_dir`` is set) and
    :py:class:`TrainingDivergence` is raised.
    '''
    rng = config.streams.rng('policy_init', 1)
    trainer = PPO(policy, config.ppo, rng)
    result = TrainingResult(stage=stage, networks=policy.networks)
    last_good = snapshot(policy.networks)
    session = None
    for iteration in range(iterations):
        if cancel is not None and cancel():
            logger.warning("training canceled after %d iterations", iteration)
            result.canceled = True
            break
        probability = None
        if probability_fn is not None:
            probability = probability_fn(iteration)
            policy.probability = probability
        buffer = collect_rollouts(policy, envs, config.ppo.num_steps, rng, session)
        session = buffer.session
        compute_gae(buffer, config.ppo.gamma, config.ppo.lam)
        metrics = trainer.update(buffer)
        row = {'iteration': iteration, **rollout_stats(buffer, envs)}
        for name in ('policy_loss', 'value_loss', 'entropy', 'aux_loss', 'kl'):
            row[name] = metrics.get(name, math.nan)
        row['learning_rate'] = metrics['learning_rate']
        row['anneal_probability'] = '' if probability is None else probability
        diverged = (not math.isfinite(row['mean_reward']) or not finite_networks(policy.networks)
                    or (metrics['updates'] == 0 and metrics['skipped'] > 0))
        if diverged:
            restore(policy.networks, last_good)
            if checkpoint_dir:
                result.checkpoint = save_checkpoint(stage, policy.networks, checkpoint_dir, seed=config.seed,
                                                    manifest={**(meta or {}), 'iteration': iteration - 1, 'diverged': True})
            raise TrainingDivergence(f"{stage} training diverged at iteration {iteration}",
                                     last_good_iteration=iteration - 1)
        last_good = snapshot(policy.networks)
        result.rows.append(row)
        result.episodes.extend(buffer.finished)
        logger.debug("iteration %d mean reward %.4f", iteration, row['mean_reward'])
        if on_iteration is not None:
            on_iteration(row)
    return result
