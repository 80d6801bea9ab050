# pylint: disable=W0621

import os

import pytest
import yaml

from crosslab.config import RunConfig
from crosslab.evaluation import EpisodeRecord
from crosslab.exceptions import (
    CallbackError,
    ConfigurationError,
    CrossLabException,
    SimulationFault,
    TrainingDivergence,
)
from crosslab.runner import RunManifest, Runner, RunOutput, write_logs
from crosslab.utils import read_csv

COLUMNS = ('iteration', 'reward')


@pytest.fixture
def rc(tmp_path):
    return RunConfig(seed=4, output_dir=str(tmp_path), ident='run')


def two_iterations(runner):
    rows = [{'iteration': 0, 'reward': 1.0}, {'iteration': 1, 'reward': 2.0}]
    for row in rows:
        runner.event_callback(row)
    return RunOutput(COLUMNS, rows)


def test_successful_run(rc):
    runner = Runner(rc, 'train-oracle')
    status, exitcode = runner.run(two_iterations, COLUMNS)
    assert (status, exitcode) == ('successful', 0)
    with open(os.path.join(rc.artifact_dir, 'status')) as f:
        assert f.read() == 'successful'
    with open(os.path.join(rc.artifact_dir, 'rc')) as f:
        assert f.read() == '0'
    assert read_csv(runner.metrics_file) == (['iteration', 'reward'], [['0', '1.0'], ['1', '2.0']])
    header, rows = read_csv(runner.output.files['episodes'])
    assert header[:4] == ['env_id', 'category', 'level', 'seed'] and rows == []


def test_manifest_contents(rc):
    runner = Runner(rc, 'eval', {'episodes': 2}, checkpoints=['oracle.bin'])
    runner.run(lambda run: RunOutput())
    manifest = RunManifest.load(os.path.join(rc.artifact_dir, 'manifest.yaml'))
    assert manifest.command == 'eval'
    assert manifest.arguments == {'episodes': 2}
    assert manifest.checkpoints == ['oracle.bin']
    assert manifest.seeds['master'] == 4
    assert manifest.seeds['terrain'] == rc.streams.seed('terrain')
    assert manifest.config['seed'] == 4
    assert manifest.versions['checkpoint_format'] == '1.0'
    assert manifest.metric_files[0].endswith('metrics.csv')


def test_manifest_is_immutable(rc):
    Runner(rc, 'eval').run(lambda run: RunOutput())
    with pytest.raises(CrossLabException, match='cannot be rewritten'):
        Runner(rc, 'eval').run(lambda run: RunOutput())


def test_manifest_load_errors(tmp_path):
    fn = tmp_path / 'manifest.yaml'
    fn.write_text('- 1\n')
    with pytest.raises(ConfigurationError, match='not a run manifest'):
        RunManifest.load(str(fn))
    with pytest.raises(ConfigurationError, match='cannot read run manifest'):
        RunManifest.load(str(tmp_path / 'missing.yaml'))


def test_write_logs_header_only(tmp_path):
    manifest = RunManifest('eval')
    files = write_logs(str(tmp_path), COLUMNS, [], [], manifest)
    assert read_csv(files['metrics']) == (list(COLUMNS), [])
    assert read_csv(files['episodes'])[1] == []
    assert os.path.exists(files['manifest'])
    # an existing manifest is left alone
    assert write_logs(str(tmp_path), COLUMNS, [], [], RunManifest('other'))['manifest'] == files['manifest']
    assert RunManifest.load(files['manifest']).command == 'eval'


def test_write_logs_records(tmp_path):
    record = EpisodeRecord(env_id=1, category='flat', level=0, seed=9)
    record.record_step((1.0, 0.0, 0.0), (1.0, 0.0, 0.0))
    record.finish('timeout', 0.02, 0.02)
    files = write_logs(str(tmp_path), COLUMNS, [{'iteration': 0}], [record])
    _, rows = read_csv(files['episodes'])
    assert rows[0][:6] == ['1', 'flat', '0', '9', 'timeout', '1']
    assert 'manifest' not in files


def test_runtime_fault_fails_with_rc_2(rc):
    def job(run):
        raise SimulationFault('non-finite state', env_id=3)

    runner = Runner(rc, 'eval')
    assert runner.run(job) == ('failed', 2)
    assert isinstance(runner.exception, SimulationFault)


def test_divergence_is_logged(rc, caplog):
    def job(run):
        raise TrainingDivergence('loss is nan', last_good_iteration=4)

    Runner(rc, 'train-oracle').run(job)
    assert 'diverged after iteration 4' in caplog.text


def test_nonzero_job_rc_fails(rc):
    assert Runner(rc, 'eval').run(lambda run: RunOutput(rc=3)) == ('failed', 3)


def test_cancel_callback(rc):
    def job(run):
        run.cancel()
        return RunOutput()

    runner = Runner(rc, 'train-oracle', cancel_callback=lambda: True)
    assert runner.run(job) == ('canceled', 254)


def test_cancel_callback_error(rc):
    def kaboom():
        raise Exception('kaboom')

    def job(run):
        run.cancel()
        return RunOutput()

    with pytest.raises(CallbackError):
        Runner(rc, 'train-oracle', cancel_callback=kaboom).run(job)


def test_status_handler(rc):
    seen = []
    Runner(rc, 'eval', {'episodes': 1},
           status_handler=lambda data, runner_config: seen.append(data)).run(lambda run: RunOutput())
    assert [d['status'] for d in seen] == ['starting', 'running', 'successful']
    assert seen[0]['command'] == 'eval'
    assert seen[0]['runner_ident'] == 'run'


@pytest.mark.parametrize('handler', ('event_handler', 'artifacts_handler', 'finished_callback', 'status_handler'))
def test_handler_errors_are_callback_errors(rc, handler):
    def kaboom(*args, **kwargs):
        raise RuntimeError('kaboom')

    with pytest.raises(CallbackError, match='kaboom'):
        Runner(rc, 'train-oracle', **{handler: kaboom}).run(two_iterations, COLUMNS)


def test_handlers_called(rc, mocker):
    events = mocker.Mock()
    artifacts = mocker.Mock()
    finished = mocker.Mock()
    runner = Runner(rc, 'train-oracle', event_handler=events, artifacts_handler=artifacts,
                    finished_callback=finished)
    runner.run(two_iterations, COLUMNS)
    assert events.call_count == 2
    artifacts.assert_called_once_with(rc.artifact_dir)
    finished.assert_called_once_with(runner)


def test_config_dump_in_manifest_loads(rc):
    Runner(rc, 'eval').run(lambda run: RunOutput())
    with open(os.path.join(rc.artifact_dir, 'manifest.yaml')) as f:
        data = yaml.safe_load(f)
    assert RunConfig.from_mapping(data['config']).to_dict() == rc.to_dict()
