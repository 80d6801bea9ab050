# pylint: disable=W0201

from __future__ import annotations

import dataclasses
import logging
import os
import tempfile

from collections.abc import Mapping
from typing import Any
from uuid import uuid4

import yaml

from crosslab import defaults
from crosslab.exceptions import ConfigurationError
from crosslab.loader import ArtifactLoader
from crosslab.output import debug

logger = logging.getLogger('crosslab')


def key_lines(text: str) -> dict[str, int]:
    '''
    Map every dotted key of a YAML document to its 1-based line number

    :param str text: The YAML document.

    :return: A dict such as ``{'ppo': 1, 'ppo.gamma': 2}``; empty when the
        document is empty or not a mapping.
    '''
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return {}
    lines: dict[str, int] = {}

    def _walk(node, prefix):
        if not isinstance(node, yaml.MappingNode):
            return
        for key_node, value_node in node.value:
            dotted = f"{prefix}{key_node.value}"
            lines[dotted] = key_node.start_mark.line + 1
            _walk(value_node, dotted + '.')

    _walk(root, '')
    return lines


def _where(key: str, lines: Mapping[str, int]) -> str:
    line = lines.get(key)
    return f"'{key}' (line {line})" if line else f"'{key}'"


def _coerce(default: Any, value: Any, key: str, lines: Mapping[str, int]) -> Any:
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{_where(key, lines)} must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{_where(key, lines)} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{_where(key, lines)} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigurationError(f"{_where(key, lines)} must be a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigurationError(f"{_where(key, lines)} must be a list, got {value!r}")
        if default and isinstance(default[0], float):
            return [_coerce(default[0], v, key, lines) for v in value]
        return list(value)
    return value


class ConfigSection:
    '''
    Mixin for dataclass config sections

    Subclasses are dataclasses whose defaults document every key.  Unknown
    keys and mistyped values are configuration errors naming the key and,
    when known, the line it came from.
    '''

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None, prefix: str = '', lines: Mapping[str, int] | None = None):
        lines = lines or {}
        data = data or {}
        if not isinstance(data, Mapping):
            raise ConfigurationError(f"{_where(prefix.rstrip('.'), lines)} must be a mapping")
        section = cls()  # type: ignore[call-arg]
        known = {f.name for f in dataclasses.fields(cls)}  # type: ignore[arg-type]
        for key, value in data.items():
            dotted = f"{prefix}{key}"
            if key not in known:
                raise ConfigurationError(f"unknown configuration key {_where(dotted, lines)}")
            setattr(section, key, _coerce(getattr(section, key), value, dotted, lines))
        section.validate(prefix, lines)
        return section

    def validate(self, prefix: str, lines: Mapping[str, int]) -> None:
        pass

    @staticmethod
    def fail(key: str, message: str, lines: Mapping[str, int]) -> None:
        raise ConfigurationError(f"{_where(key, lines)} {message}")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)  # type: ignore[call-overload]


class BaseConfig:
    '''
    Artifact directory handling shared by every command

    Artifacts for a run live in ``<output_dir>/<ident>``.  When no ident is
    given a uuid is generated.
    '''

    def __init__(self, output_dir: str | None = None, ident: str | None = None):
        if output_dir:
            self.output_dir = os.path.abspath(output_dir)
        elif defaults.AUTO_CREATE_DIR:
            self.output_dir = os.path.abspath(defaults.AUTO_CREATE_DIR)
        else:
            self.output_dir = tempfile.mkdtemp(prefix='.crosslab-')
        self.ident = str(uuid4()) if ident is None else str(ident)
        self.loader = ArtifactLoader(os.getcwd())

    @property
    def artifact_dir(self) -> str:
        return os.path.join(self.output_dir, self.ident)

    def prepare(self) -> str:
        os.makedirs(self.artifact_dir, exist_ok=True, mode=0o700)
        debug(f"artifact directory is {self.artifact_dir}")
        return self.artifact_dir
