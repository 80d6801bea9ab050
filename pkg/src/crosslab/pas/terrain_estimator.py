from __future__ import annotations

import logging
import math

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from crosslab import defaults
from crosslab.exceptions import CheckpointIncompatible
from crosslab.net import tensor as T
from crosslab.net.checkpoint import save_checkpoint
from crosslab.net.layers import Network, NetworkSpec, build_network
from crosslab.net.optim import Adam
from crosslab.pas.inference import load_policy
from crosslab.pas.policies import DeployPolicy, estimate
from crosslab.pas.training import TrainingResult, make_world
from crosslab.sim.env import VecEnv
from crosslab.terrain.world import SCAN_POINTS

logger = logging.getLogger(__name__)

FEATURE_DIM = defaults.PROPRIO_DIM + defaults.LATENT_DIM
STANCE_HALF_LENGTH = 0.3
STANCE_HALF_WIDTH = 0.2
ESTIMATOR_COLUMNS = (
    'epoch', 'loss', 'train_accuracy', 'holdout_accuracy', 'terrain_fraction',
    'true_terrain', 'false_terrain', 'true_plane', 'false_plane',
)
STANCE_MASK = (np.abs(SCAN_POINTS[:, 0]) <= STANCE_HALF_LENGTH + 1e-9) & \
    (np.abs(SCAN_POINTS[:, 1]) <= STANCE_HALF_WIDTH + 1e-9)


def terrain_label(scan, threshold: float = 0.05) -> np.ndarray:
    '''
    1 where the height range under the stance exceeds ``threshold``, else 0

    :param scan: one or more 187-value terrain scans.
    '''
    scan = np.asarray(scan, dtype=np.float64)
    under = scan[..., STANCE_MASK]
    return (under.max(axis=-1) - under.min(axis=-1) > threshold).astype(np.float64)


def classifier_spec(net_config) -> NetworkSpec:
    return NetworkSpec('mlp', FEATURE_DIM, 1, hidden=net_config.terrain_estimator,
                       activation=net_config.activation)


def classify_terrain(network: Network, features, bound=None):
    '''
    Probability that the robot stands on terrain rather than a plane
    '''
    logits = network(features, bound=bound)
    return T.sigmoid(T.reshape(logits, np.shape(T.value_of(logits))[:-1]))


def bce_with_logits(logits, labels):
    # max(z, 0) - z * y + log(1 + exp(-|z|))
    negative_abs = T.minimum(logits, T.mul(logits, -1.0))
    softplus = T.log(T.add(T.exp(negative_abs), 1.0))
    return T.mean(T.add(T.sub(T.maximum(logits, 0.0), T.mul(logits, labels)), softplus))


@dataclass
class TerrainDataset:
    features: np.ndarray
    labels: np.ndarray

    @property
    def imbalance(self) -> float:
        positives = int(self.labels.sum())
        negatives = len(self.labels) - positives
        if min(positives, negatives) == 0:
            return math.inf
        return max(positives, negatives) / min(positives, negatives)


def collect_terrain_data(policy: DeployPolicy, config, steps: int) -> TerrainDataset:
    '''
    Roll out a deploy policy and pair deploy-time inputs with terrain labels

    Features are the proprioception and the estimator's predicted latent;
    labels come from the exact terrain scan under the stance.
    '''
    threshold = config.pas.terrain_label_threshold
    features, labels = [], []
    with VecEnv(make_world(config), config) as envs:
        proprio, _, terrain = envs.reset()
        starts = np.ones(envs.num_envs, dtype=bool)
        state = policy.initial_state(envs.num_envs)
        for _ in range(steps):
            masks = (~starts).astype(np.float64)[None]
            latent, state = estimate(policy.networks, policy.params, proprio[None], state, masks)
            inputs = np.concatenate([proprio, latent[0]], axis=-1)
            features.append(inputs)
            labels.append(terrain_label(terrain, threshold))
            result = envs.step(policy.joint_targets(policy.networks['low_level'](inputs)))
            proprio, terrain = result.proprio, result.terrain
            starts = result.dones
    return TerrainDataset(np.concatenate(features), np.concatenate(labels))


def rebalance(dataset: TerrainDataset, rng: np.random.Generator) -> TerrainDataset:
    '''
    Oversample the minority class up to the majority count
    '''
    positive = np.flatnonzero(dataset.labels > 0.5)
    negative = np.flatnonzero(dataset.labels <= 0.5)
    if len(positive) == 0 or len(negative) == 0:
        return dataset
    minority, majority = (positive, negative) if len(positive) < len(negative) else (negative, positive)
    extra = rng.choice(minority, len(majority) - len(minority), replace=True)
    index = np.concatenate([majority, minority, extra])
    return TerrainDataset(dataset.features[index], dataset.labels[index])


def accuracy(network: Network, dataset: TerrainDataset) -> float:
    if len(dataset.labels) == 0:
        return math.nan
    predicted = classify_terrain(network, dataset.features) > 0.5
    return float(np.mean(predicted == (dataset.labels > 0.5)))


def confusion(network: Network, dataset: TerrainDataset) -> dict[str, int]:
    '''
    Confusion counts of the classifier, terrain being the positive class
    '''
    if len(dataset.labels) == 0:
        return {'true_terrain': 0, 'false_terrain': 0, 'true_plane': 0, 'false_plane': 0}
    predicted = classify_terrain(network, dataset.features) > 0.5
    actual = dataset.labels > 0.5
    return {
        'true_terrain': int(np.sum(predicted & actual)),
        'false_terrain': int(np.sum(predicted & ~actual)),
        'true_plane': int(np.sum(~predicted & ~actual)),
        'false_plane': int(np.sum(~predicted & actual)),
    }


def fit_classifier(network: Network, train: TerrainDataset, holdout: TerrainDataset, config,
                   rng: np.random.Generator, on_epoch: Callable[[dict], None] | None = None) -> list[dict]:
    cfg = config.pas
    optimizer = Adam(network.params, lr=cfg.estimator_learning_rate, max_grad_norm=config.ppo.max_grad_norm)
    rows = []
    for epoch in range(cfg.terrain_epochs):
        order = rng.permutation(len(train.labels))
        losses = []
        for start in range(0, len(order), cfg.terrain_batch_size):
            index = order[start:start + cfg.terrain_batch_size]
            with T.GradientTape() as tape:
                bound = tape.watch_all(network.params)
                logits = network(train.features[index], bound=bound)
                loss = bce_with_logits(T.reshape(logits, (len(index),)), train.labels[index])
            optimizer.step(tape.gradient(loss, bound))
            losses.append(float(T.value_of(loss)))
        row = {
            'epoch': epoch,
            'loss': float(np.mean(losses)) if losses else math.nan,
            'train_accuracy': accuracy(network, train),
            'holdout_accuracy': accuracy(network, holdout),
            'terrain_fraction': float(np.mean(train.labels)) if len(train.labels) else math.nan,
            **confusion(network, holdout),
        }
        rows.append(row)
        if on_epoch is not None:
            on_epoch(row)
    return rows


def train_terrain_estimator(policy_ckpt: str, config, checkpoint_dir: str | None = None,
                            on_iteration: Callable[[dict], None] | None = None) -> TrainingResult:
    '''
    Train the plane-versus-terrain classifier on a deploy policy's rollouts

    A class imbalance above ``pas.imbalance_ratio`` logs a warning and the
    training split is rebalanced by oversampling.

    :raises: CheckpointIncompatible when the checkpoint is not a deploy-style policy.
    '''
    policy, ckpt = load_policy(policy_ckpt, config.streams, config.ppo.action_scale)
    if not isinstance(policy, DeployPolicy):
        raise CheckpointIncompatible(f"{policy_ckpt} holds a {ckpt.stage} policy; a deploy policy is required")
    rng = config.streams.rng('policy_init', 3)
    dataset = collect_terrain_data(policy, config, config.pas.terrain_steps)
    order = rng.permutation(len(dataset.labels))
    cut = int(round(len(order) * (1.0 - config.pas.terrain_holdout)))
    train = TerrainDataset(dataset.features[order[:cut]], dataset.labels[order[:cut]])
    holdout = TerrainDataset(dataset.features[order[cut:]], dataset.labels[order[cut:]])
    if train.imbalance > config.pas.imbalance_ratio:
        logger.warning("terrain labels are imbalanced (%.1f:1), rebalancing the training split", train.imbalance)
        train = rebalance(train, rng)
    network = build_network(classifier_spec(config.net), config.streams.seed('policy_init', 4))
    rows = fit_classifier(network, train, holdout, config, rng, on_iteration)
    result = TrainingResult(stage='terrain_estimator', networks={'classifier': network}, rows=rows,
                            columns=ESTIMATOR_COLUMNS, meta={'policy': policy_ckpt})
    if checkpoint_dir:
        result.checkpoint = save_checkpoint('terrain_estimator', {'classifier': network}, checkpoint_dir,
                                            seed=config.seed, manifest=result.meta)
    return result
