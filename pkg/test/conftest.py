# pylint: disable=W0621

import numpy as np
import pytest

from crosslab import defaults
from crosslab.config import RunConfig
from crosslab.pas.policies import OraclePolicy, build_networks, network_specs
from crosslab.terrain import HeightFieldWorld, build_world


def pytest_addoption(parser):
    parser.addoption('--run-slow', action='store_true', default=False,
                     help="run the desk-scale training acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption('--run-slow'):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def change_save_path(tmp_path, mocker):
    mocker.patch.object(defaults, 'AUTO_CREATE_DIR', str(tmp_path))


@pytest.fixture
def small_config(tmp_path):
    '''
    A configuration small enough for unit tests: few envs, tiny networks, short rollouts
    '''
    return RunConfig.from_mapping({
        'seed': 3,
        'output_dir': str(tmp_path / 'runs'),
        'env': {'num_envs': 2},
        'ppo': {'num_steps': 8, 'iterations': 2, 'num_minibatches': 1, 'num_epochs': 1},
        'net': {
            'terrain_encoder': [16, 8],
            'low_level': [16],
            'critic': [16],
            'estimator_lstm': [8],
            'estimator_mlp': [8],
            'terrain_estimator': [8],
            'adaptation_channels': [4],
            'adaptation_kernels': [4],
            'adaptation_strides': [2],
        },
        'pas': {'iterations': 2, 'rma_window': 8, 'terrain_steps': 8, 'terrain_epochs': 2},
        'eval': {'episodes': 2, 'trials': 2},
    })


@pytest.fixture(scope='session')
def world():
    return build_world(11)


@pytest.fixture(scope='session')
def flat_world():
    return HeightFieldWorld.from_array(np.zeros((161, 161)), 0.05, (-4.0, -4.0))


@pytest.fixture
def specs(small_config):
    return network_specs(small_config.net, small_config.ppo.init_std, small_config.pas.rma_window)


@pytest.fixture
def oracle(small_config, specs):
    networks = build_networks(specs, OraclePolicy.NETWORKS, small_config.streams)
    return OraclePolicy(networks, action_scale=small_config.ppo.action_scale)
