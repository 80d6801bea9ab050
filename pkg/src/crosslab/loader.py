from __future__ import annotations

import os
import json
import codecs

from typing import Any, Dict
from yaml import safe_load, YAMLError

from crosslab.exceptions import ConfigurationError
from crosslab.output import debug


class ArtifactLoader:
    '''
    Handles loading and caching file contents from disk

    Config, scenario and manifest files are deserialized as JSON or YAML.
    Parsed contents are cached per absolute path so a benchmark that reads
    the same scenario many times only touches the disk once.
    '''

    def __init__(self, base_path: str):
        self._cache: Dict[str, Any] = {}
        self.base_path = base_path

    def _load_json(self, contents: str) -> Any:
        try:
            return json.loads(contents)
        except ValueError:
            return None

    def _load_yaml(self, contents: str) -> Any:
        try:
            return safe_load(contents)
        except YAMLError as exc:
            debug(f"yaml parse failed: {exc}")
            return None

    def _get_contents(self, path: str) -> str:
        '''
        Loads the contents of the file specified by path

        :raises: ConfigurationError if the file cannot be loaded.
        '''
        try:
            if not os.path.exists(path):
                raise ConfigurationError(f"specified path does not exist {path}")
            with codecs.open(path, encoding='utf-8') as f:
                return f.read()
        except (IOError, OSError) as exc:
            raise ConfigurationError(f"error trying to load file contents: {exc}") from exc

    def abspath(self, path: str) -> str:
        if path.startswith('~'):
            return os.path.expanduser(path)
        if not path.startswith(os.path.sep):
            path = os.path.join(self.base_path, path)
        return path

    def isfile(self, path: str) -> bool:
        return os.path.isfile(self.abspath(path))

    def load_text(self, path: str) -> str:
        return self._get_contents(self.abspath(path))

    def load_file(self, path: str, objtype: Any | None = None) -> Any:
        '''
        Load and deserialize the file specified by path

        An empty file deserializes to an empty mapping.

        :param str path: The full or relative path to the file to be loaded.
        :param Any objtype: Expected type of the deserialized content.

        :raises: ConfigurationError on error during file load or deserialization.
        '''
        path = self.abspath(path)
        if path in self._cache:
            return self._cache[path]

        debug(f"cache miss, attempting to load file from disk: {path}")
        contents = self._get_contents(path)

        if not contents.strip():
            parsed: Any = {}
        else:
            parsed = self._load_json(contents)
            if parsed is None:
                parsed = self._load_yaml(contents)
            if parsed is None:
                raise ConfigurationError(f"unable to parse {path} as JSON or YAML")

        if objtype and not isinstance(parsed, objtype):
            raise ConfigurationError(f"invalid file serialization type for contents of {path}")

        self._cache[path] = parsed
        return parsed
