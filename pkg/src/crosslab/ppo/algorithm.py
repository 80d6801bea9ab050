from __future__ import annotations

import logging
import math

import numpy as np

from crosslab.exceptions import NonFiniteGradient
from crosslab.net import tensor as T
from crosslab.net.distributions import entropy, kl_divergence, log_prob
from crosslab.net.optim import Adam
from crosslab.ppo.actor_critic import ActorCritic
from crosslab.ppo.buffer import RolloutBuffer, normalize_advantages, slice_state

logger = logging.getLogger(__name__)

MAX_LOG_RATIO = 20.0


def adapt_learning_rate(lr: float, kl: float, desired_kl: float = 0.01,
                        lr_min: float = 1e-5, lr_max: float = 1e-2) -> float:
    '''
    Step the learning rate toward a KL target

    Divide by 1.5 when ``kl > 2 * desired_kl``, multiply by 1.5 when
    ``kl < desired_kl / 2``, then clamp to ``[lr_min, lr_max]``.
    '''
    if kl > 2.0 * desired_kl:
        lr = lr / 1.5
    elif 0.0 <= kl < 0.5 * desired_kl:
        lr = lr * 1.5
    return min(max(lr, lr_min), lr_max)


def surrogate_loss(new_log_prob, old_log_prob, advantages, clip: float):
    '''
    Negative clipped surrogate objective, averaged over samples
    '''
    log_ratio = T.clip(T.sub(new_log_prob, old_log_prob), -MAX_LOG_RATIO, MAX_LOG_RATIO)
    ratio = T.exp(log_ratio)
    unclipped = T.mul(ratio, advantages)
    clipped = T.mul(T.clip(ratio, 1.0 - clip, 1.0 + clip), advantages)
    return T.mul(T.mean(T.minimum(unclipped, clipped)), -1.0)


def value_loss(values, returns):
    return T.mean(T.square(T.sub(values, returns)))


class PPO:
    '''
    Clipped-surrogate policy optimization over a :py:class:`RolloutBuffer`

    Every epoch visits each minibatch of whole environment sequences once.
    Before each optimizer step the learning rate follows the KL between the
    rollout policy and the current one (``lr_schedule: adaptive``).
    '''

    def __init__(self, policy: ActorCritic, config, rng: np.random.Generator):
        self.policy = policy
        self.config = config
        self.rng = rng
        self.learning_rate = config.learning_rate
        self.optimizer = Adam(policy.parameters(), lr=config.learning_rate, max_grad_norm=config.max_grad_norm)

    def _losses(self, bound, buffer: RolloutBuffer, env_index, flat):
        cfg = self.config
        batch = buffer.batch(env_index)
        masks = (~buffer.episode_starts[:, env_index]).astype(np.float64)
        state = slice_state(buffer.initial_state, env_index)
        mean, _ = self.policy.forward(bound, batch, state, masks)
        steps, width = masks.shape
        mean = T.reshape(mean, (steps * width, -1))
        log_std = bound['log_std']['value']
        values = self.policy.critic_value(bound, batch['proprio'], batch['privileged'], batch['terrain'])
        values = T.reshape(values, (steps * width,))
        new_log_prob = log_prob(mean, log_std, flat['actions'])
        policy_loss = surrogate_loss(new_log_prob, flat['log_probs'], flat['advantages'], cfg.clip)
        critic_loss = value_loss(values, flat['returns'])
        ent = entropy(log_std)
        loss = T.sub(T.add(policy_loss, T.mul(critic_loss, cfg.value_coef)), T.mul(ent, cfg.entropy_coef))
        aux = self.policy.auxiliary_loss(bound, batch, state, masks)
        if aux is not None:
            loss = T.add(loss, aux)
        kl = kl_divergence(flat['means'], flat['log_stds'], T.value_of(mean),
                           np.broadcast_to(T.value_of(log_std), flat['means'].shape))
        return loss, {
            'policy_loss': float(T.value_of(policy_loss)),
            'value_loss': float(T.value_of(critic_loss)),
            'entropy': float(T.value_of(ent)),
            'aux_loss': 0.0 if aux is None else float(T.value_of(aux)),
            'kl': float(np.mean(kl)),
        }

    def update(self, buffer: RolloutBuffer) -> dict[str, float]:
        '''
        Run all epochs of minibatch updates on a buffer with computed returns

        A minibatch whose loss or gradient is not finite is skipped and
        counted in ``skipped``; the policy is left as it was.
        '''
        cfg = self.config
        buffer.advantages = normalize_advantages(buffer.advantages)
        totals: dict[str, float] = {}
        updates = skipped = 0
        grad_norm = 0.0
        for _ in range(cfg.num_epochs):
            for env_index, flat in buffer.minibatches(cfg.num_minibatches, self.rng):
                with T.GradientTape() as tape:
                    bound = self.policy.bind(tape)
                    loss, stats = self._losses(bound, buffer, env_index, flat)
                if not math.isfinite(float(T.value_of(loss))):
                    logger.warning("skipping minibatch with non-finite loss")
                    skipped += 1
                    continue
                if cfg.lr_schedule == 'adaptive':
                    self.learning_rate = adapt_learning_rate(self.learning_rate, stats['kl'], cfg.desired_kl,
                                                             cfg.lr_min, cfg.lr_max)
                grads = tape.gradient(loss, ActorCritic.sources(bound, self.policy.trainable))
                try:
                    grad_norm = self.optimizer.step(grads, self.learning_rate)
                except NonFiniteGradient as exc:
                    logger.warning("skipping minibatch: %s", exc)
                    skipped += 1
                    continue
                self.policy.clamp_std(cfg.min_std)
                updates += 1
                for name, value in stats.items():
                    totals[name] = totals.get(name, 0.0) + value
        metrics = {name: value / max(updates, 1) for name, value in totals.items()}
        metrics.update({'learning_rate': self.learning_rate, 'grad_norm': float(grad_norm),
                        'updates': updates, 'skipped': skipped})
        return metrics


def update(policy: ActorCritic, buffer: RolloutBuffer, config, rng: np.random.Generator,
           trainer: PPO | None = None) -> dict[str, float]:
    '''
    One PPO update; pass a persistent ``trainer`` to keep optimizer state across iterations
    '''
    trainer = trainer or PPO(policy, config, rng)
    return trainer.update(buffer)
