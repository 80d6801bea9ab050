import os

import pytest
import yaml

from crosslab.config import RunConfig, dump_config, load_config, save_config
from crosslab.exceptions import ConfigurationError


def write(tmp_path, text, name='config.yml'):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_defaults():
    config = load_config()
    assert config.seed == 0
    assert config.env.num_envs == 64
    assert config.ppo.gamma == 0.99
    assert config.pas.schedule == 'exp:0.9998'
    assert config.nav.controller == 'kinematic'
    assert config.serial


def test_empty_file_is_all_defaults(tmp_path):
    assert load_config(write(tmp_path, '\n')).to_dict()['ppo'] == RunConfig().ppo.to_dict()
    assert load_config(write(tmp_path, '# nothing\n', 'c.yml')).seed == 0


def test_load_values(tmp_path):
    config = load_config(write(tmp_path, "seed: 7\nppo:\n  gamma: 0.9\nenv:\n  num_envs: 4\n"))
    assert config.seed == 7
    assert config.ppo.gamma == 0.9
    assert config.env.num_envs == 4
    assert config.streams.master_seed == 7


def test_gamma_out_of_range_names_key_and_line(tmp_path):
    path = write(tmp_path, "seed: 1\nppo:\n  gamma: 1.5\n")
    with pytest.raises(ConfigurationError, match=r"'ppo.gamma' \(line 3\) must be in \(0, 1\]"):
        load_config(path)


def test_unknown_keys(tmp_path):
    with pytest.raises(ConfigurationError, match=r"unknown configuration key 'turbo' \(line 2\)"):
        load_config(write(tmp_path, "seed: 1\nturbo: true\n"))
    with pytest.raises(ConfigurationError, match=r"unknown configuration key 'env.warp' \(line 3\)"):
        load_config(write(tmp_path, "env:\n  num_envs: 2\n  warp: 1\n", 'b.yml'))


def test_parse_error_names_line(tmp_path):
    with pytest.raises(ConfigurationError, match='at line'):
        load_config(write(tmp_path, "ppo:\n  gamma: [0.9\n"))


def test_top_level_must_be_mapping(tmp_path):
    with pytest.raises(ConfigurationError, match='mapping at the top level'):
        load_config(write(tmp_path, "- 1\n- 2\n"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match='does not exist'):
        load_config(str(tmp_path / 'nope.yml'))


@pytest.mark.parametrize('data, key', (
    ({'seed': -1}, "'seed'"),
    ({'seed': True}, "'seed'"),
    ({'threads': -2}, "'threads'"),
    ({'env': {'friction': [0.5, 3.0]}}, 'env.friction'),
    ({'env': {'lin_vel_x': [1.0, -1.0]}}, 'env.lin_vel_x'),
    ({'env': {'disabled_randomizations': ['gravity']}}, 'env.disabled_randomizations'),
    ({'ppo': {'learning_rate': 0.5}}, 'ppo.learning_rate'),
    ({'ppo': {'lr_schedule': 'cosine'}}, 'ppo.lr_schedule'),
    ({'net': {'low_level': [0]}}, 'net.low_level'),
    ({'net': {'adaptation_kernels': [4]}}, 'net.adaptation_channels'),
    ({'pas': {'schedule': 'exp:2'}}, 'pas.schedule'),
    ({'pas': {'baseline': 'tcn'}}, 'pas.baseline'),
    ({'nav': {'controller': 'wheels'}}, 'nav.controller'),
    ({'nav': {'localization_noise': -0.1}}, 'nav.localization_noise'),
    ({'eval': {'trials': 0}}, 'eval.episodes'),
))
def test_invalid_values(data, key):
    with pytest.raises(ConfigurationError, match=key):
        RunConfig.from_mapping(data)


def test_dump_round_trip(tmp_path):
    config = RunConfig.from_mapping({'seed': 5, 'pas': {'schedule': 'cosine'}, 'nav': {'kp_lin': 1.5}})
    path = write(tmp_path, dump_config(config), 'dumped.yml')
    assert load_config(path).to_dict() == config.to_dict()


def test_save_config(tmp_path):
    config = RunConfig(seed=2)
    fn = save_config(config, str(tmp_path), 'config.yml')
    assert fn == os.path.join(str(tmp_path), 'config.yml')
    with open(fn) as f:
        assert yaml.safe_load(f)['seed'] == 2


def test_override():
    config = RunConfig.from_mapping({'ppo': {'iterations': 3}})
    changed = config.override(**{'ppo.iterations': 10, 'seed': 4, 'nav.kp_lin': None})
    assert changed.ppo.iterations == 10
    assert changed.seed == 4
    assert config.ppo.iterations == 3
    with pytest.raises(ConfigurationError):
        config.override(**{'ppo.gamma': 2.0})


def test_threads_and_reference_mode():
    assert not RunConfig(threads=4).serial
    assert RunConfig(threads=4, reference_mode=True).serial
    with pytest.raises(ConfigurationError, match='reference_mode'):
        RunConfig.from_mapping({'reference_mode': 'yes'})
