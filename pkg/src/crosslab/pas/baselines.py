from __future__ import annotations

import logging
import math

from collections.abc import Callable

import numpy as np

from crosslab.exceptions import InvalidInputError, NonFiniteGradient, TrainingDivergence
from crosslab.net import tensor as T
from crosslab.net.checkpoint import load_checkpoint, save_checkpoint
from crosslab.net.optim import Adam
from crosslab.pas.policies import (
    BlindPolicy,
    ConcurrentPolicy,
    DeployPolicy,
    OraclePolicy,
    RMAPolicy,
    build_networks,
    network_specs,
)
from crosslab.pas.training import TrainingResult, make_world, rollout_stats, run_ppo
from crosslab.ppo.actor_critic import ActorCritic
from crosslab.ppo.buffer import slice_state
from crosslab.ppo.rollout import collect_rollouts
from crosslab.sim.env import VecEnv
from crosslab.sim.reward import TERM_WEIGHTS

logger = logging.getLogger(__name__)

BASELINE_KINDS = ('blind', 'concurrent', 'il', 'rma')
SUPERVISED_COLUMNS = (
    'iteration', 'mean_reward', *(f"reward_{name}" for name in TERM_WEIGHTS),
    'mean_episode_length', 'episodes', 'success_rate', 'mean_level', 'faults',
    'supervised_loss', 'learning_rate',
)


def _supervised_loop(policy: ActorCritic, envs: VecEnv, config, loss_fn, stage_label: str,
                     on_iteration=None, cancel=None) -> TrainingResult:
    '''
    Roll out the student, then fit it to the oracle targets for a few epochs

    ``loss_fn(bound, buffer, env_index)`` returns the scalar loss of one
    minibatch of environments.  Minibatches with non-finite gradients are
    skipped; an iteration that skips all of them counts as divergence.
    '''
    rng = config.streams.rng('policy_init', 2)
    lr = config.pas.estimator_learning_rate
    optimizer = Adam(policy.parameters(), lr=lr, max_grad_norm=config.ppo.max_grad_norm)
    result = TrainingResult(stage='baseline', networks=policy.networks, columns=SUPERVISED_COLUMNS)
    session = None
    for iteration in range(config.pas.iterations):
        if cancel is not None and cancel():
            result.canceled = True
            break
        buffer = collect_rollouts(policy, envs, config.ppo.num_steps, rng, session)
        session = buffer.session
        losses = []
        for _ in range(config.pas.imitation_epochs):
            for env_index, _ in buffer.minibatches(config.ppo.num_minibatches, rng):
                with T.GradientTape() as tape:
                    bound = policy.bind(tape)
                    loss = loss_fn(bound, buffer, env_index)
                value = float(T.value_of(loss))
                if not math.isfinite(value):
                    raise TrainingDivergence(f"{stage_label} loss became non-finite at iteration {iteration}",
                                             last_good_iteration=iteration - 1)
                try:
                    optimizer.step(tape.gradient(loss, ActorCritic.sources(bound, policy.trainable)))
                except NonFiniteGradient as exc:
                    logger.warning("skipping minibatch: %s", exc)
                    continue
                losses.append(value)
        if not losses:
            raise TrainingDivergence(f"{stage_label} skipped every minibatch at iteration {iteration}",
                                     last_good_iteration=iteration - 1)
        row = {'iteration': iteration, **rollout_stats(buffer, envs),
               'supervised_loss': float(np.mean(losses)), 'learning_rate': lr}
        result.rows.append(row)
        result.episodes.extend(buffer.finished)
        if on_iteration is not None:
            on_iteration(row)
    return result


def _train_il(oracle: OraclePolicy, config, envs, on_iteration, cancel) -> TrainingResult:
    student = DeployPolicy.from_oracle(oracle.networks, config.streams, probability=0.0,
                                       action_scale=config.ppo.action_scale)
    student.trainable = ('estimator', 'estimator_head', 'low_level')

    def loss_fn(bound, buffer, env_index):
        batch = buffer.batch(env_index)
        masks = (~buffer.episode_starts[:, env_index]).astype(np.float64)
        oracle_mean, _ = oracle.forward(oracle.params, batch, None, masks)
        state = slice_state(buffer.initial_state, env_index)
        return student.imitation_loss(bound, batch, state, masks, oracle_mean)

    return _supervised_loop(student, envs, config, loss_fn, 'imitation', on_iteration, cancel)


def _train_rma(oracle: OraclePolicy, specs, config, envs, on_iteration, cancel) -> TrainingResult:
    networks = build_networks(specs, ('adaptation',), config.streams)
    for name in ('low_level', 'critic', 'log_std'):
        networks[name] = oracle.networks[name].copy()
    policy = RMAPolicy(networks, action_scale=config.ppo.action_scale)

    def loss_fn(bound, buffer, env_index):
        batch = buffer.batch(env_index)
        target = T.value_of(oracle.true_latent(oracle.params, batch['terrain'], batch['privileged']))
        predicted = policy.adapt(bound, batch['history'])
        return T.mean(T.square(T.sub(predicted, target)))

    return _supervised_loop(policy, envs, config, loss_fn, 'adaptation', on_iteration, cancel)


def train_baseline(kind: str, config, oracle_ckpt: str | None = None, checkpoint_dir: str | None = None,
                   on_iteration: Callable[[dict], None] | None = None,
                   cancel: Callable[[], bool] | None = None) -> TrainingResult:
    '''
    Train one of the comparison policies

    ``blind`` and ``concurrent`` are one-stage PPO runs for ``ppo.iterations``.
    ``il`` imitates the oracle's actions on the student's own rollouts and
    ``rma`` regresses the oracle latent from a proprioception window; both
    run ``pas.iterations`` and need ``oracle_ckpt``.

    :raises: InvalidInputError for an unknown kind.
    '''
    if kind not in BASELINE_KINDS:
        raise InvalidInputError(f"unknown baseline {kind!r}; expected one of {', '.join(BASELINE_KINDS)}")
    specs = network_specs(config.net, config.ppo.init_std, config.pas.rma_window)
    oracle = None
    if kind in ('il', 'rma'):
        ckpt = load_checkpoint(oracle_ckpt, stage='oracle',
                               specs={name: specs[name] for name in OraclePolicy.NETWORKS})
        oracle = OraclePolicy(ckpt.networks, action_scale=config.ppo.action_scale)
    logger.info("training %s baseline", kind)
    with VecEnv(make_world(config), config) as envs:
        if kind == 'blind':
            policy = BlindPolicy(build_networks(specs, BlindPolicy.NETWORKS, config.streams),
                                 action_scale=config.ppo.action_scale)
            result = run_ppo(policy, envs, config, config.ppo.iterations, 'baseline',
                             on_iteration=on_iteration, cancel=cancel, checkpoint_dir=checkpoint_dir,
                             meta={'kind': kind})
        elif kind == 'concurrent':
            policy = ConcurrentPolicy(build_networks(specs, ConcurrentPolicy.NETWORKS, config.streams),
                                      action_scale=config.ppo.action_scale)
            result = run_ppo(policy, envs, config, config.ppo.iterations, 'baseline',
                             on_iteration=on_iteration, cancel=cancel, checkpoint_dir=checkpoint_dir,
                             meta={'kind': kind})
        elif kind == 'il':
            result = _train_il(oracle, config, envs, on_iteration, cancel)
        else:
            result = _train_rma(oracle, specs, config, envs, on_iteration, cancel)
    result.meta = {'kind': kind}
    if checkpoint_dir:
        result.checkpoint = save_checkpoint('baseline', result.networks, checkpoint_dir, seed=config.seed,
                                            manifest={'kind': kind, 'iterations': len(result.rows)})
    return result
