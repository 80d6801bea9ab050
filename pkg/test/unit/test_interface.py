import io
import os

import numpy as np
import pytest

from crosslab import interface
from crosslab.config import RunConfig
from crosslab.exceptions import CheckpointNotFound
from crosslab.interface import init_runner, require_checkpoint, resolve_config
from crosslab.nav.scenarios import Scenario
from crosslab.terrain import generate_tile, read_heightfield
from crosslab.utils import read_csv


def test_default_callback_set(mocker):
    mocker.patch('crosslab.interface.signal_handler', side_effect=AttributeError('Raised intentionally'))

    with pytest.raises(AttributeError, match='Raised intentionally'):
        init_runner('eval', RunConfig(), ignore_logging=True)


def test_set_cancel_callback(mocker):
    mock_runner = mocker.patch('crosslab.interface.Runner', side_effect=AttributeError('Raised intentionally'))

    def custom_cancel_callback():
        return 'custom'

    with pytest.raises(AttributeError, match='Raised intentionally'):
        init_runner('eval', RunConfig(), ignore_logging=True, cancel_callback=custom_cancel_callback)

    assert mock_runner.call_args.kwargs['cancel_callback'] is custom_cancel_callback


def test_resolve_config(tmp_path):
    path = tmp_path / 'lab.yml'
    path.write_text('seed: 9\n')
    config = resolve_config(str(path), **{'ppo.iterations': 5, 'pas.schedule': None})
    assert (config.seed, config.ppo.iterations) == (9, 5)
    original = RunConfig(seed=2)
    assert resolve_config(original, **{'eval.trials': None}) is original


def test_require_checkpoint(tmp_path):
    fn = tmp_path / 'ckpt.bin'
    fn.write_bytes(b'x')
    assert require_checkpoint(str(fn)) == str(fn)
    with pytest.raises(CheckpointNotFound, match='checkpoint not found: .*missing.bin'):
        require_checkpoint(str(tmp_path / 'missing.bin'))
    with pytest.raises(CheckpointNotFound, match=r'oracle checkpoint not found: \(none given\)'):
        require_checkpoint('', 'oracle checkpoint')


def test_gen_terrain_matches_generator(tmp_path):
    fn = interface.gen_terrain('stairs_up', 3, 7, str(tmp_path / 'tiles' / 'tile.hf'))
    assert fn == str(tmp_path / 'tiles' / 'tile.hf')
    tile = generate_tile('stairs_up', 3, 7)
    world = read_heightfield(fn)
    np.testing.assert_allclose(world.heights, tile.heights, atol=1e-6)


@pytest.mark.parametrize('call', (
    lambda config: interface.evaluate('missing.bin', config),
    lambda config: interface.train_pas('missing.bin', 'cosine', config),
    lambda config: interface.ablate('missing.bin', ('none',), config),
    lambda config: interface.train_baseline('rma', config),
    lambda config: interface.train_terrain_estimator(None, config),
))
def test_missing_checkpoint_writes_nothing(small_config, call):
    with pytest.raises(CheckpointNotFound):
        call(small_config)
    assert not os.path.exists(small_config.output_dir)


def test_navigate_kinematic(small_config):
    config = small_config.override(ident='nav', **{'eval.noisy_localization': 0.0})
    rows = []
    runner = interface.navigate(config, [Scenario('flat-forward', 'flat')], trials=2, event_handler=rows.append)
    assert runner.status == 'successful'
    assert len(rows) == 2
    header, table = read_csv(os.path.join(runner.artifact_dir, 'metrics.csv'))
    assert header[0] == 'scenario'
    assert [r[0] for r in table] == ['flat-forward', 'flat']
    assert len(read_csv(os.path.join(runner.artifact_dir, 'trials.csv'))[1]) == 2
    assert os.path.exists(os.path.join(runner.artifact_dir, 'manifest.yaml'))


def test_navigate_golden_mismatch(small_config, tmp_path):
    golden = tmp_path / 'golden.csv'
    golden.write_text('scenario\nnothing\n')
    config = small_config.override(**{'eval.noisy_localization': 0.0})
    runner = interface.navigate(config, [Scenario('flat-forward', 'flat')], trials=1, golden=str(golden))
    assert (runner.status, runner.rc) == ('failed', interface.GOLDEN_MISMATCH_RC)


def test_serve_planner():
    out = io.StringIO()
    assert interface.serve_planner(RunConfig(), io.StringIO('junk\n'), out) == 1
    assert '"error"' in out.getvalue()
