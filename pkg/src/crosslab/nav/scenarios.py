from __future__ import annotations

import dataclasses

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Any

from crosslab.exceptions import ConfigurationError, InvalidInputError
from crosslab.loader import ArtifactLoader
from crosslab.nav.scene import DIRECTIONS, KINDS, Scene, build_scene
from crosslab.nav.types import Goal, QuestionKind


@dataclass
class Scenario:
    '''
    A replayable navigation test

    ``kind`` ``None`` (or ``flat``) means open ground.  ``goal`` overrides
    the generated goal; ``planner_script`` maps question kinds to payloads
    replayed before the planner answers; ``terrain_stream`` scripts the
    terrain classifications seen while climbing.
    '''
    name: str
    kind: str | None = 'stairs'
    direction: str = 'forward'
    seed: int = 0
    goal: dict | None = None
    planner_script: dict = field(default_factory=dict)
    terrain_stream: list = field(default_factory=list)
    localization_noise: float | None = None

    def __post_init__(self):
        if self.kind == 'flat':
            self.kind = None
        if self.kind is not None and self.kind not in KINDS:
            raise InvalidInputError(f"scenario {self.name!r}: unknown intermediation kind {self.kind!r}")
        if self.direction not in DIRECTIONS:
            raise InvalidInputError(f"scenario {self.name!r}: unknown route direction {self.direction!r}")
        for kind in self.planner_script:
            try:
                QuestionKind(kind)
            except ValueError as exc:
                raise InvalidInputError(f"scenario {self.name!r}: unknown question kind {kind!r}") from exc

    @property
    def terrain(self) -> str:
        return self.kind or 'flat'

    def build(self, nav_config, seed: int | None = None) -> Scene:
        scene = build_scene(self.kind, self.direction, self.seed if seed is None else seed, nav_config)
        if self.goal is not None:
            scene = dataclasses.replace(scene, goal=Goal.from_dict(self.goal))
        return scene

    def to_dict(self) -> dict[str, Any]:
        data = dataclasses.asdict(self)
        data['kind'] = self.terrain
        return data

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], source: str = '') -> Scenario:
        if not isinstance(data, Mapping):
            raise ConfigurationError(f"{source or 'scenario'} must be a mapping")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown scenario key '{unknown[0]}' in {source or 'scenario'}")
        values = dict(data)
        values.setdefault('name', source or 'scenario')
        try:
            return cls(**values)
        except (InvalidInputError, TypeError) as exc:
            raise ConfigurationError(f"invalid scenario {source}: {exc}") from exc


def load_scenario(path: str) -> Scenario:
    '''
    Read a scenario from a YAML or JSON file

    :raises: ConfigurationError for unreadable files or unknown keys.
    '''
    loader = ArtifactLoader('.')
    data = loader.load_file(path, Mapping)
    return Scenario.from_mapping(data, path)


def default_scenarios(kinds: Iterable[str] = KINDS, directions: Iterable[str] = tuple(DIRECTIONS)) -> list[Scenario]:
    '''
    One scenario per intermediation kind and route direction
    '''
    return [Scenario(f"{kind}-{direction}", kind, direction, seed=index)
            for index, (kind, direction) in enumerate((k, d) for k in kinds for d in directions)]


def scenarios_from_config(eval_config) -> list[Scenario]:
    if not eval_config.scenarios:
        return default_scenarios()
    return [load_scenario(path) for path in eval_config.scenarios]
