from __future__ import annotations

from typing import Any

import numpy as np

from crosslab.exceptions import CheckpointIncompatible
from crosslab.net.checkpoint import Checkpoint, load_checkpoint
from crosslab.pas.policies import policy_from_networks
from crosslab.ppo.actor_critic import ActorCritic


def policy_kind(ckpt: Checkpoint) -> str:
    if ckpt.stage in ('oracle', 'deploy'):
        return ckpt.stage
    if ckpt.stage == 'baseline':
        kind = ckpt.meta.get('kind')
        if kind in ('blind', 'concurrent', 'il', 'rma'):
            return kind
        raise CheckpointIncompatible(f"baseline checkpoint has unknown kind {kind!r}")
    raise CheckpointIncompatible(f"a {ckpt.stage} checkpoint does not hold a locomotion policy")


def load_policy(path: str, streams=None, action_scale: float = 0.25) -> tuple[ActorCritic, Checkpoint]:
    '''
    Rebuild a locomotion policy from any oracle, deploy or baseline checkpoint

    :raises: CheckpointNotFound, CheckpointCorrupt or CheckpointIncompatible.
    '''
    ckpt = load_checkpoint(path)
    kind = policy_kind(ckpt)
    try:
        policy = policy_from_networks(kind, ckpt.networks, streams, action_scale)
    except ValueError as exc:
        raise CheckpointIncompatible(f"{path}: {exc}") from exc
    return policy, ckpt


class PolicyRunner:
    '''
    Deterministic acting through a policy's deployment path

    Keeps the recurrent state of every environment and resets it for the
    environments flagged in ``starts``.
    '''

    def __init__(self, policy: ActorCritic, num_envs: int):
        self.policy = policy
        self.reset(num_envs)

    def reset(self, num_envs: int) -> None:
        self.num_envs = num_envs
        self.state: Any = self.policy.initial_state(num_envs)

    def mean(self, obs: dict, starts) -> np.ndarray:
        starts = np.asarray(starts, dtype=bool)
        extras = self.policy.step_extras(obs, starts)
        batch = {name: np.asarray(value)[None] for name, value in {**obs, **extras}.items()}
        masks = (~starts).astype(np.float64)[None]
        mean, self.state = self.policy.deploy_forward(batch, self.state, masks)
        return mean[0]

    def act(self, obs: dict, starts) -> np.ndarray:
        return self.policy.joint_targets(self.mean(obs, starts))
