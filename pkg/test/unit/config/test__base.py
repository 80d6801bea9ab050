import os

import pytest

from crosslab.config._base import BaseConfig, ConfigSection, key_lines
from crosslab.config.run import NavConfig
from crosslab.exceptions import ConfigurationError
from crosslab.loader import ArtifactLoader


def test_base_config_init_defaults(tmp_path):
    rc = BaseConfig(output_dir=tmp_path.as_posix())
    assert rc.output_dir == tmp_path.as_posix()
    assert rc.ident is not None
    assert rc.artifact_dir == tmp_path.joinpath(rc.ident).as_posix()
    assert isinstance(rc.loader, ArtifactLoader)


def test_base_config_with_ident(tmp_path):
    rc = BaseConfig(output_dir=tmp_path.as_posix(), ident=42)
    assert rc.ident == '42'
    assert not os.path.exists(rc.artifact_dir)
    assert rc.prepare() == tmp_path.joinpath('42').as_posix()
    assert os.path.isdir(rc.artifact_dir)


def test_base_config_auto_dir(tmp_path):
    # change_save_path points the default location at tmp_path
    rc = BaseConfig()
    assert rc.output_dir == tmp_path.as_posix()


def test_key_lines():
    text = "seed: 1\nppo:\n  gamma: 0.9\n  lam: 0.8\nnav:\n  kp_lin: 2.0\n"
    assert key_lines(text) == {'seed': 1, 'ppo': 2, 'ppo.gamma': 3, 'ppo.lam': 4, 'nav': 5, 'nav.kp_lin': 6}
    assert key_lines('- a\n- b\n') == {}
    assert key_lines('a: [') == {}


def test_section_coerces_numbers():
    section = NavConfig.from_mapping({'kp_lin': 2, 'image_width': 320, 'image_height': 240}, 'nav.')
    assert section.kp_lin == 2.0 and isinstance(section.kp_lin, float)


@pytest.mark.parametrize('data, message', (
    ({'kp_lin': 'fast'}, "'nav.kp_lin' must be a number"),
    ({'kp_lin': True}, "'nav.kp_lin' must be a number"),
    ({'image_width': 1.5}, "'nav.image_width' must be an integer"),
    ({'planner_command': 3}, "'nav.planner_command' must be a string"),
    ({'warp': 9}, "unknown configuration key 'nav.warp'"),
))
def test_section_errors_name_the_key(data, message):
    with pytest.raises(ConfigurationError, match=message):
        NavConfig.from_mapping(data, 'nav.')


def test_section_error_names_the_line():
    with pytest.raises(ConfigurationError, match=r"'nav.kp_lin' \(line 7\)"):
        NavConfig.from_mapping({'kp_lin': 'x'}, 'nav.', {'nav.kp_lin': 7})


def test_section_must_be_mapping():
    with pytest.raises(ConfigurationError, match='must be a mapping'):
        NavConfig.from_mapping([1, 2], 'nav.')


def test_plain_section_has_no_validation():
    assert ConfigSection().validate('', {}) is None
