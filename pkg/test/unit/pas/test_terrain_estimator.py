import math

import numpy as np
import pytest

from crosslab.exceptions import CheckpointIncompatible
from crosslab.net import GradientTape, load_checkpoint, save_checkpoint
from crosslab.pas.policies import DeployPolicy
from crosslab.pas.terrain_estimator import (
    ESTIMATOR_COLUMNS,
    STANCE_MASK,
    TerrainDataset,
    bce_with_logits,
    confusion,
    rebalance,
    terrain_label,
    train_terrain_estimator,
)


def test_flat_scan_is_plane():
    assert terrain_label(np.full(187, -0.3)) == 0.0
    assert terrain_label(np.zeros((4, 187))).tolist() == [0.0] * 4


def test_step_under_stance_is_terrain():
    scan = np.zeros(187)
    scan[np.flatnonzero(STANCE_MASK)[0]] = 0.08
    assert terrain_label(scan) == 1.0
    assert terrain_label(scan, threshold=0.1) == 0.0


def test_step_outside_stance_is_ignored():
    scan = np.zeros(187)
    scan[np.flatnonzero(~STANCE_MASK)[0]] = 0.5
    assert terrain_label(scan) == 0.0


def test_bce_matches_closed_form():
    logits = np.array([2.0, -1.0, 0.0])
    labels = np.array([1.0, 0.0, 1.0])
    expected = np.mean([math.log1p(math.exp(-2.0)), math.log1p(math.exp(-1.0)), math.log(2.0)])
    assert float(bce_with_logits(logits, labels)) == pytest.approx(expected)
    with GradientTape() as tape:
        z = tape.watch(logits)
        loss = bce_with_logits(z, labels)
    grad, = tape.gradient(loss, [z])
    sigmoid = 1.0 / (1.0 + np.exp(-logits))
    np.testing.assert_allclose(grad, (sigmoid - labels) / 3.0, atol=1e-12)


def test_confusion_counts():
    dataset = TerrainDataset(np.array([[5.0], [5.0], [-5.0], [-5.0], [-5.0]]), np.array([1.0, 0.0, 0.0, 0.0, 1.0]))
    network = lambda features, bound=None: features  # noqa: E731
    assert confusion(network, dataset) == {'true_terrain': 1, 'false_terrain': 1, 'true_plane': 2, 'false_plane': 1}
    assert sum(confusion(network, TerrainDataset(np.zeros((0, 1)), np.zeros(0))).values()) == 0


def test_rebalance_oversamples_minority():
    dataset = TerrainDataset(np.arange(12.0)[:, None], np.array([1.0] * 2 + [0.0] * 10))
    assert dataset.imbalance == 5.0
    balanced = rebalance(dataset, np.random.default_rng(0))
    assert balanced.labels.sum() == 10
    assert len(balanced.labels) == 20
    assert set(balanced.features[balanced.labels == 1.0, 0]) <= {0.0, 1.0}


def test_rebalance_single_class_unchanged():
    dataset = TerrainDataset(np.zeros((3, 1)), np.zeros(3))
    assert dataset.imbalance == math.inf
    assert rebalance(dataset, np.random.default_rng(0)) is dataset


def test_train_terrain_estimator(small_config, oracle, tmp_path):
    deploy = DeployPolicy.from_oracle(oracle.networks, small_config.streams)
    policy_ckpt = save_checkpoint('deploy', deploy.networks, str(tmp_path / 'deploy'))
    epochs = []
    result = train_terrain_estimator(policy_ckpt, small_config, checkpoint_dir=str(tmp_path / 'est'),
                                     on_iteration=epochs.append)
    assert result.columns == ESTIMATOR_COLUMNS
    assert len(epochs) == small_config.pas.terrain_epochs
    assert 0.0 <= epochs[-1]['train_accuracy'] <= 1.0
    assert all(epochs[-1][key] >= 0 for key in ESTIMATOR_COLUMNS[5:])
    ckpt = load_checkpoint(result.checkpoint, stage='terrain_estimator')
    assert ckpt.networks['classifier'].spec.input_size == 45 + 36
    assert ckpt.meta == {'policy': policy_ckpt}


def test_terrain_estimator_needs_deploy_policy(small_config, oracle, tmp_path):
    fn = save_checkpoint('oracle', oracle.networks, str(tmp_path))
    with pytest.raises(CheckpointIncompatible, match='deploy policy is required'):
        train_terrain_estimator(fn, small_config)
