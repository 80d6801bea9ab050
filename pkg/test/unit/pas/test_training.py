# pylint: disable=W0621

import os

import numpy as np
import pytest

from crosslab.exceptions import (
    CheckpointIncompatible,
    CheckpointNotFound,
    InvalidInputError,
    NonFiniteGradient,
    TrainingDivergence,
)
from crosslab.net import load_checkpoint
from crosslab.net.optim import Adam
from crosslab.pas.baselines import SUPERVISED_COLUMNS, train_baseline
from crosslab.pas.stages import INITIAL_CHECKPOINT, train_deploy, train_oracle
from crosslab.pas.training import METRIC_COLUMNS


@pytest.fixture
def oracle_ckpt(small_config, tmp_path):
    config = small_config.override(**{'ppo.iterations': 1})
    return train_oracle(config, checkpoint_dir=str(tmp_path / 'oracle')).checkpoint


def test_train_oracle(small_config, tmp_path):
    rows = []
    result = train_oracle(small_config, checkpoint_dir=str(tmp_path), on_iteration=rows.append)
    assert [r['iteration'] for r in rows] == [0, 1]
    assert result.rows == rows
    assert set(rows[0]) <= set(METRIC_COLUMNS)
    assert rows[0]['anneal_probability'] == ''
    ckpt = load_checkpoint(result.checkpoint, stage='oracle')
    assert ckpt.meta == {'iterations': 2}
    assert set(ckpt.networks) == {'terrain_encoder', 'low_level', 'critic', 'estimator', 'estimator_head', 'log_std'}


def test_training_is_reproducible(small_config):
    config = small_config.override(**{'ppo.iterations': 1})
    a = train_oracle(config)
    b = train_oracle(config)
    assert a.rows == b.rows
    assert all(a.networks[name].equals(b.networks[name]) for name in a.networks)


def test_cancel_before_first_iteration(small_config):
    result = train_oracle(small_config, cancel=lambda: True)
    assert result.canceled
    assert result.rows == []


def test_divergence_restores_last_good(small_config, tmp_path, mocker):
    mocker.patch('crosslab.pas.training.PPO.update', return_value={
        'learning_rate': 1e-3, 'updates': 0, 'skipped': 1})
    with pytest.raises(TrainingDivergence) as exc:
        train_oracle(small_config, checkpoint_dir=str(tmp_path))
    assert exc.value.last_good_iteration == -1
    ckpt = load_checkpoint(os.path.join(str(tmp_path), 'checkpoint.bin'))
    assert ckpt.meta['diverged'] is True


def test_train_deploy(small_config, oracle_ckpt, tmp_path):
    result = train_deploy(oracle_ckpt, 'exp:0.5', small_config, checkpoint_dir=str(tmp_path))
    assert [r['anneal_probability'] for r in result.rows] == [1.0, 0.5]
    assert result.meta['schedule'] == 'exp:0.5'
    initial = load_checkpoint(os.path.join(str(tmp_path), INITIAL_CHECKPOINT), stage='deploy')
    oracle = load_checkpoint(oracle_ckpt)
    for name in ('low_level', 'estimator', 'terrain_encoder'):
        assert initial.networks[name].equals(oracle.networks[name])
    final = load_checkpoint(result.checkpoint, stage='deploy')
    assert final.networks['terrain_encoder'].equals(oracle.networks['terrain_encoder'])
    assert not final.networks['low_level'].equals(oracle.networks['low_level'])


def test_train_deploy_needs_oracle(small_config, tmp_path):
    with pytest.raises(CheckpointNotFound):
        train_deploy(str(tmp_path / 'missing.bin'), 'cosine', small_config)


def test_train_deploy_rejects_other_stage(small_config, oracle_ckpt, tmp_path):
    deploy = train_deploy(oracle_ckpt, 'none', small_config, checkpoint_dir=str(tmp_path)).checkpoint
    with pytest.raises(CheckpointIncompatible, match='oracle checkpoint is required'):
        train_deploy(deploy, 'none', small_config)


@pytest.mark.parametrize('kind', ('blind', 'concurrent'))
def test_one_stage_baselines(small_config, tmp_path, kind):
    result = train_baseline(kind, small_config, checkpoint_dir=str(tmp_path))
    assert len(result.rows) == small_config.ppo.iterations
    assert load_checkpoint(result.checkpoint, stage='baseline').meta['kind'] == kind


@pytest.mark.parametrize('kind', ('il', 'rma'))
def test_supervised_baselines(small_config, oracle_ckpt, tmp_path, kind):
    result = train_baseline(kind, small_config, oracle_ckpt, checkpoint_dir=str(tmp_path))
    assert result.columns == SUPERVISED_COLUMNS
    assert len(result.rows) == small_config.pas.iterations
    assert all(np.isfinite(r['supervised_loss']) for r in result.rows)
    assert load_checkpoint(result.checkpoint).meta['kind'] == kind


@pytest.mark.parametrize('kind', ('il', 'rma'))
def test_supervised_baselines_skip_non_finite_gradients(small_config, oracle_ckpt, mocker, kind):
    real_step = Adam.step
    calls = []

    def step(self, grads, lr=None):
        calls.append(lr)
        if len(calls) == 1:
            raise NonFiniteGradient('gradient norm is nan')
        return real_step(self, grads, lr)

    mocker.patch.object(Adam, 'step', step)
    result = train_baseline(kind, small_config, oracle_ckpt)
    assert len(result.rows) == small_config.pas.iterations
    assert len(calls) > 1
    assert all(np.isfinite(r['supervised_loss']) for r in result.rows)


def test_supervised_baseline_diverges_when_nothing_updates(small_config, oracle_ckpt, mocker):
    mocker.patch.object(Adam, 'step', side_effect=NonFiniteGradient('gradient norm is nan'))
    with pytest.raises(TrainingDivergence, match='skipped every minibatch at iteration 0'):
        train_baseline('rma', small_config, oracle_ckpt)


def test_baseline_kind_checked(small_config):
    with pytest.raises(InvalidInputError, match='unknown baseline'):
        train_baseline('tcn', small_config)
    with pytest.raises(CheckpointNotFound):
        train_baseline('rma', small_config, None)
