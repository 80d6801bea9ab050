from __future__ import annotations

import math

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any

import yaml

from crosslab.config._base import BaseConfig, ConfigSection, key_lines
from crosslab.exceptions import ConfigurationError
from crosslab.loader import ArtifactLoader
from crosslab.utils import dump_artifact
from crosslab.utils.seeding import SeedStreams

CATEGORY_NAMES = (
    'stairs_up', 'stairs_down', 'platform_up', 'platform_down',
    'ramp_up', 'ramp_down', 'flat', 'rough',
)

RANDOMIZATION_NAMES = (
    'added_mass', 'com_offset', 'friction', 'motor_strength',
    'init_joint_scale', 'init_base_vel',
)


def _check_range(section: ConfigSection, prefix: str, name: str, lines, lo=-math.inf, hi=math.inf) -> None:
    value = getattr(section, name)
    if len(value) != 2 or value[0] > value[1]:
        section.fail(f"{prefix}{name}", f"must be a [low, high] pair, got {value!r}", lines)
    if value[0] < lo or value[1] > hi:
        section.fail(f"{prefix}{name}", f"must lie within [{lo}, {hi}], got {value!r}", lines)


@dataclass
class TerrainConfig(ConfigSection):
    cell_size: float = 0.05
    border: float = 1.0
    start_zone: float = 1.0
    rough_frequency: float = 1.25
    categories: list = field(default_factory=lambda: list(CATEGORY_NAMES))
    init_level: int = 0
    max_level: int = 9
    curriculum: bool = True

    def validate(self, prefix, lines):
        if not 0.0 < self.cell_size <= 0.5:
            self.fail(f"{prefix}cell_size", "must be in (0, 0.5]", lines)
        if self.border < 0 or self.start_zone < 0 or self.start_zone >= 4.0:
            self.fail(f"{prefix}start_zone", "must be in [0, 4) and border non-negative", lines)
        for name in self.categories:
            if name not in CATEGORY_NAMES:
                self.fail(f"{prefix}categories", f"unknown category {name!r}", lines)
        if not self.categories:
            self.fail(f"{prefix}categories", "must not be empty", lines)
        if not 0 <= self.init_level <= self.max_level <= 9:
            self.fail(f"{prefix}init_level", "levels must satisfy 0 <= init_level <= max_level <= 9", lines)


@dataclass
class EnvConfig(ConfigSection):
    num_envs: int = 64
    episode_seconds: float = 20.0
    command_interval: float = 5.0
    push_interval: float = 9.0
    push_velocity: float = 0.5
    lin_vel_x: list = field(default_factory=lambda: [-1.0, 1.0])
    lin_vel_y: list = field(default_factory=lambda: [-0.5, 0.5])
    ang_vel_z: list = field(default_factory=lambda: [-1.0, 1.0])
    noise: bool = True
    noise_lin_vel: float = 0.05
    noise_ang_vel: float = 0.2
    noise_gravity: float = 0.05
    noise_joint_pos: float = 0.01
    noise_joint_vel: float = 1.5
    added_mass: list = field(default_factory=lambda: [0.0, 3.0])
    com_x: list = field(default_factory=lambda: [-0.2, 0.2])
    com_y: list = field(default_factory=lambda: [-0.1, 0.1])
    com_z: list = field(default_factory=lambda: [-0.05, 0.05])
    friction: list = field(default_factory=lambda: [0.0, 2.0])
    motor_strength: list = field(default_factory=lambda: [0.9, 1.1])
    init_joint_scale: list = field(default_factory=lambda: [0.5, 1.5])
    init_base_vel: list = field(default_factory=lambda: [-1.0, 1.0])
    disabled_randomizations: list = field(default_factory=list)
    kp: float = 40.0
    kd: float = 0.5
    gravity: float = 9.81
    contact_stiffness: float = 5000.0
    contact_damping: float = 120.0
    fall_roll: float = 0.8
    fall_pitch: float = 1.0
    stuck_enabled: bool = True
    stuck_distance: float = 0.05
    stuck_window: float = 1.0

    def validate(self, prefix, lines):
        if self.num_envs < 1:
            self.fail(f"{prefix}num_envs", "must be at least 1", lines)
        for name in ('lin_vel_x', 'lin_vel_y', 'ang_vel_z', 'added_mass', 'com_x', 'com_y', 'com_z',
                     'motor_strength', 'init_joint_scale', 'init_base_vel'):
            _check_range(self, prefix, name, lines)
        _check_range(self, prefix, 'friction', lines, 0.0, 2.0)
        for name in self.disabled_randomizations:
            if name not in RANDOMIZATION_NAMES:
                self.fail(f"{prefix}disabled_randomizations", f"unknown randomization {name!r}", lines)
        for name in ('episode_seconds', 'command_interval', 'push_interval', 'kp', 'stuck_window'):
            if getattr(self, name) <= 0:
                self.fail(f"{prefix}{name}", "must be positive", lines)


@dataclass
class PPOConfig(ConfigSection):
    iterations: int = 300
    num_steps: int = 24
    num_epochs: int = 5
    num_minibatches: int = 4
    clip: float = 0.2
    desired_kl: float = 0.01
    entropy_coef: float = 0.01
    value_coef: float = 1.0
    gamma: float = 0.99
    lam: float = 0.95
    learning_rate: float = 0.001
    lr_schedule: str = 'adaptive'
    lr_min: float = 1e-5
    lr_max: float = 1e-2
    max_grad_norm: float = 1.0
    init_std: float = 1.0
    min_std: float = 0.05
    action_scale: float = 0.25

    def validate(self, prefix, lines):
        for name in ('gamma', 'lam', 'desired_kl', 'entropy_coef', 'learning_rate', 'min_std'):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                self.fail(f"{prefix}{name}", f"must be in (0, 1], got {value}", lines)
        if self.clip <= 0:
            self.fail(f"{prefix}clip", "must be positive", lines)
        for name in ('iterations', 'num_steps', 'num_epochs', 'num_minibatches'):
            if getattr(self, name) < 1:
                self.fail(f"{prefix}{name}", "must be at least 1", lines)
        if self.lr_schedule not in ('adaptive', 'fixed'):
            self.fail(f"{prefix}lr_schedule", "must be 'adaptive' or 'fixed'", lines)
        if not 0 < self.lr_min <= self.learning_rate <= self.lr_max:
            self.fail(f"{prefix}learning_rate", "must satisfy lr_min <= learning_rate <= lr_max", lines)
        if self.init_std < self.min_std:
            self.fail(f"{prefix}init_std", "must not be below min_std", lines)


@dataclass
class NetConfig(ConfigSection):
    activation: str = 'elu'
    terrain_encoder: list = field(default_factory=lambda: [128, 64])
    low_level: list = field(default_factory=lambda: [512, 256, 128])
    critic: list = field(default_factory=lambda: [512, 256, 128])
    estimator_lstm: list = field(default_factory=lambda: [256, 256])
    estimator_mlp: list = field(default_factory=lambda: [256, 128])
    terrain_estimator: list = field(default_factory=lambda: [256, 128])
    adaptation_channels: list = field(default_factory=lambda: [32, 32])
    adaptation_kernels: list = field(default_factory=lambda: [8, 5])
    adaptation_strides: list = field(default_factory=lambda: [4, 1])

    def validate(self, prefix, lines):
        if self.activation not in ('elu', 'tanh', 'linear'):
            self.fail(f"{prefix}activation", "must be one of elu, tanh, linear", lines)
        for name in ('terrain_encoder', 'low_level', 'critic', 'estimator_lstm', 'estimator_mlp',
                     'terrain_estimator', 'adaptation_channels', 'adaptation_kernels', 'adaptation_strides'):
            sizes = getattr(self, name)
            if any(isinstance(s, bool) or not isinstance(s, int) or s < 1 for s in sizes):
                self.fail(f"{prefix}{name}", f"must be a list of positive integers, got {sizes!r}", lines)
        if not self.estimator_lstm:
            self.fail(f"{prefix}estimator_lstm", "needs at least one layer", lines)
        if not len(self.adaptation_channels) == len(self.adaptation_kernels) == len(self.adaptation_strides):
            self.fail(f"{prefix}adaptation_channels", "channels, kernels and strides must have equal length", lines)


@dataclass
class PASConfig(ConfigSection):
    schedule: str = 'exp:0.9998'
    iterations: int = 300
    oracle_checkpoint: str = ''
    policy_checkpoint: str = ''
    baseline: str = 'blind'
    rma_window: int = 50
    estimator_learning_rate: float = 0.001
    estimator_epochs: int = 1
    imitation_epochs: int = 5
    terrain_label_threshold: float = 0.05
    terrain_steps: int = 200
    terrain_epochs: int = 30
    terrain_batch_size: int = 256
    terrain_holdout: float = 0.2
    imbalance_ratio: float = 20.0

    def validate(self, prefix, lines):
        from crosslab.pas.anneal import parse_schedule  # pylint: disable=C0415
        try:
            parse_schedule(self.schedule, self.iterations)
        except ValueError as exc:
            self.fail(f"{prefix}schedule", str(exc), lines)
        if self.baseline not in ('blind', 'concurrent', 'il', 'rma'):
            self.fail(f"{prefix}baseline", "must be one of blind, concurrent, il, rma", lines)
        if self.rma_window < 1 or self.iterations < 1:
            self.fail(f"{prefix}rma_window", "window and iterations must be at least 1", lines)
        if not 0.0 < self.terrain_holdout < 1.0:
            self.fail(f"{prefix}terrain_holdout", "must be in (0, 1)", lines)


@dataclass
class NavConfig(ConfigSection):
    kp_lin: float = 1.0
    kd_lin: float = 0.1
    kp_yaw: float = 2.0
    max_vx: float = 1.0
    max_vy: float = 0.5
    max_wz: float = 1.0
    done_radius: float = 0.1
    standoff: float = 0.5
    climb_debounce: int = 10
    max_skill_executions: int = 10
    planner_retries: int = 3
    planner_timeout: float = 5.0
    planner_command: str = ''
    fx: float = 387.0
    fy: float = 387.0
    image_width: int = 640
    image_height: int = 480
    camera_height: float = 0.3
    controller: str = 'kinematic'
    max_step_height: float = 0.25
    skill_max_steps: int = 1500
    localization_noise: float = 0.0
    yaw_tolerance: float = 0.1
    goal_tolerance: float = 0.2
    climb_speed: float = 0.5
    face_height: float = 0.5
    intermediation_distance: float = 2.0
    goal_beyond: float = 1.5
    policy_checkpoint: str = ''
    terrain_checkpoint: str = ''

    def validate(self, prefix, lines):
        for name in ('fx', 'fy', 'max_vx', 'max_vy', 'max_wz', 'done_radius', 'yaw_tolerance',
                     'goal_tolerance', 'climb_speed', 'face_height', 'intermediation_distance'):
            if getattr(self, name) <= 0:
                self.fail(f"{prefix}{name}", "must be positive", lines)
        if self.controller not in ('kinematic', 'policy'):
            self.fail(f"{prefix}controller", "must be 'kinematic' or 'policy'", lines)
        if self.planner_retries < 1 or self.max_skill_executions < 1 or self.climb_debounce < 1:
            self.fail(f"{prefix}planner_retries", "retries, budgets and debounce must be at least 1", lines)
        if self.localization_noise < 0:
            self.fail(f"{prefix}localization_noise", "must be non-negative", lines)


@dataclass
class EvalConfig(ConfigSection):
    episodes: int = 256
    checkpoint: str = ''
    trials: int = 20
    noisy_localization: float = 0.05
    scenarios: list = field(default_factory=list)
    golden: str = ''

    def validate(self, prefix, lines):
        if self.episodes < 1 or self.trials < 1:
            self.fail(f"{prefix}episodes", "episodes and trials must be at least 1", lines)


SECTIONS: dict[str, type] = {
    'terrain': TerrainConfig,
    'env': EnvConfig,
    'ppo': PPOConfig,
    'net': NetConfig,
    'pas': PASConfig,
    'nav': NavConfig,
    'eval': EvalConfig,
}

TOP_LEVEL: dict[str, Any] = {
    'seed': 0,
    'output_dir': 'runs',
    'ident': None,
    'threads': 1,
    'reference_mode': False,
}


class RunConfig(BaseConfig):
    '''
    Complete configuration of one crosslab command

    Built from a mapping (usually a YAML file) by :py:meth:`from_mapping`;
    every key has a default, and unknown keys are rejected.
    '''

    def __init__(self, seed: int = 0, output_dir: str = 'runs', ident: str | None = None,
                 threads: int = 1, reference_mode: bool = False, **sections):
        super().__init__(output_dir=output_dir, ident=ident)
        self.seed = seed
        self.output_dir_option = output_dir
        self.ident_option = ident
        self.threads = threads
        self.reference_mode = reference_mode
        for name, cls in SECTIONS.items():
            setattr(self, name, sections.pop(name, None) or cls())
        if sections:
            raise ConfigurationError(f"unknown configuration key '{next(iter(sections))}'")
        self.streams = SeedStreams(seed)

    # typed accessors for the dynamic sections
    terrain: TerrainConfig
    env: EnvConfig
    ppo: PPOConfig
    net: NetConfig
    pas: PASConfig
    nav: NavConfig
    eval: EvalConfig

    @property
    def serial(self) -> bool:
        return self.reference_mode or self.threads == 1

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None, lines: Mapping[str, int] | None = None) -> RunConfig:
        lines = lines or {}
        data = dict(data or {})
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key in SECTIONS:
                kwargs[key] = SECTIONS[key].from_mapping(value, f"{key}.", lines)
            elif key in TOP_LEVEL:
                kwargs[key] = value
            else:
                line = lines.get(key)
                where = f" (line {line})" if line else ''
                raise ConfigurationError(f"unknown configuration key '{key}'{where}")
        seed = kwargs.get('seed', 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigurationError(f"'seed' must be a non-negative integer, got {seed!r}")
        threads = kwargs.get('threads', 1)
        if isinstance(threads, bool) or not isinstance(threads, int) or threads < 0:
            raise ConfigurationError(f"'threads' must be a non-negative integer, got {threads!r}")
        if not isinstance(kwargs.get('reference_mode', False), bool):
            raise ConfigurationError("'reference_mode' must be true or false")
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            'seed': self.seed,
            'output_dir': self.output_dir_option,
            'ident': self.ident_option,
            'threads': self.threads,
            'reference_mode': self.reference_mode,
        }
        for name in SECTIONS:
            data[name] = getattr(self, name).to_dict()
        return data

    def override(self, **values) -> RunConfig:
        '''
        Return a copy with dotted keys replaced, e.g. ``override(**{'ppo.iterations': 10})``
        '''
        data = self.to_dict()
        for dotted, value in values.items():
            if value is None:
                continue
            target = data
            *parents, leaf = dotted.split('.')
            for parent in parents:
                target = target[parent]
            target[leaf] = value
        return RunConfig.from_mapping(data)


def load_config(path: str | None = None) -> RunConfig:
    '''
    Parse, default and validate a configuration file

    :param str path: YAML or JSON file; ``None`` yields all defaults.

    :raises: ConfigurationError naming the offending key and line.
    '''
    if not path:
        return RunConfig()
    loader = ArtifactLoader('.')
    text = loader.load_text(path)
    if not text.strip():
        return RunConfig()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, 'problem_mark', None)
        where = f" at line {mark.line + 1}" if mark is not None else ''
        raise ConfigurationError(f"cannot parse {path}{where}: {exc}") from exc
    if data is None:
        return RunConfig()
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{path} must contain a mapping at the top level")
    return RunConfig.from_mapping(data, key_lines(text))


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False, default_flow_style=False)


def save_config(config: RunConfig, path: str, filename: str) -> str:
    return dump_artifact(dump_config(config), path, filename)
