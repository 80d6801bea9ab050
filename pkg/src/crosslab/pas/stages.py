from __future__ import annotations

import logging

from collections.abc import Callable

from crosslab.net.checkpoint import load_checkpoint, save_checkpoint
from crosslab.pas.anneal import AnnealSchedule, anneal_probability, parse_schedule
from crosslab.pas.policies import DeployPolicy, OraclePolicy, build_networks, network_specs
from crosslab.pas.training import TrainingResult, make_world, run_ppo
from crosslab.sim.env import VecEnv

logger = logging.getLogger(__name__)

INITIAL_CHECKPOINT = 'checkpoint_iter0.bin'


def _specs(config):
    return network_specs(config.net, config.ppo.init_std, config.pas.rma_window)


def train_oracle(config, checkpoint_dir: str | None = None,
                 on_iteration: Callable[[dict], None] | None = None,
                 cancel: Callable[[], bool] | None = None) -> TrainingResult:
    '''
    Train the oracle policy with its concurrent latent estimator

    The actor sees proprioception plus the true latent (encoded terrain
    scan and privileged state); the critic sees the full 236-value
    observation; the estimator regresses the true latent from
    proprioception alongside the PPO loss.  Runs ``ppo.iterations``.
    '''
    specs = _specs(config)
    networks = build_networks(specs, OraclePolicy.NETWORKS, config.streams)
    policy = OraclePolicy(networks, action_scale=config.ppo.action_scale)
    logger.info("training oracle for %d iterations on %d envs", config.ppo.iterations, config.env.num_envs)
    with VecEnv(make_world(config), config) as envs:
        result = run_ppo(policy, envs, config, config.ppo.iterations, 'oracle', on_iteration=on_iteration,
                         cancel=cancel, checkpoint_dir=checkpoint_dir)
    if checkpoint_dir:
        result.checkpoint = save_checkpoint('oracle', networks, checkpoint_dir, seed=config.seed,
                                            manifest={'iterations': len(result.rows)})
    return result


def train_deploy(oracle_ckpt: str, schedule: AnnealSchedule | str, config, checkpoint_dir: str | None = None,
                 on_iteration: Callable[[dict], None] | None = None,
                 cancel: Callable[[], bool] | None = None) -> TrainingResult:
    '''
    Second stage: anneal from the true latent to the estimator's prediction

    The estimator and low-level policy start as copies of the oracle's; the
    PPO loss then trains both together while each environment feeds the true
    latent for a whole episode with the schedule's probability.  The terrain
    encoder is frozen and the critic keeps its privileged input.

    :raises: CheckpointNotFound or CheckpointIncompatible for a bad oracle checkpoint.
    '''
    specs = _specs(config)
    iterations = config.pas.iterations
    if isinstance(schedule, str):
        schedule = parse_schedule(schedule, iterations)
    ckpt = load_checkpoint(oracle_ckpt, stage='oracle',
                           specs={name: specs[name] for name in OraclePolicy.NETWORKS})
    policy = DeployPolicy.from_oracle(ckpt.networks, config.streams, probability=1.0,
                                      action_scale=config.ppo.action_scale)
    meta = {'schedule': schedule.label, 'oracle': oracle_ckpt}
    if checkpoint_dir:
        save_checkpoint('deploy', policy.networks, checkpoint_dir, INITIAL_CHECKPOINT, seed=config.seed,
                        manifest={**meta, 'iteration': 0})
    logger.info("training deploy policy with schedule %s for %d iterations", schedule.label, iterations)
    with VecEnv(make_world(config), config) as envs:
        result = run_ppo(policy, envs, config, iterations, 'deploy',
                         probability_fn=lambda i: anneal_probability(schedule, i),
                         on_iteration=on_iteration, cancel=cancel, checkpoint_dir=checkpoint_dir)
    result.meta = meta
    if checkpoint_dir:
        result.checkpoint = save_checkpoint('deploy', policy.networks, checkpoint_dir, seed=config.seed,
                                            manifest={**meta, 'iterations': len(result.rows)})
    return result
