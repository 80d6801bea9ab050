from __future__ import annotations

import json
import sys

from typing import Any

from packaging.version import InvalidVersion, Version

from crosslab import defaults
from crosslab.exceptions import CrossLabException, InvalidInputError, MalformedResponse, PlannerError
from crosslab.output import debug
from crosslab.nav.types import Goal, PlannerQuery, PlannerResponse, QuestionKind, SubTask

WIRE_VERSION = Version(defaults.PLANNER_WIRE_VERSION)


def _check_version(data: dict, error_cls) -> None:
    try:
        version = Version(str(data.get('version', '')))
    except InvalidVersion as exc:
        raise error_cls(f"planner message has an invalid version {data.get('version')!r}") from exc
    if version.major != WIRE_VERSION.major:
        raise error_cls(f"planner wire version {version} is not compatible with {WIRE_VERSION}")


def _parse_line(line: str | bytes, error_cls) -> dict:
    if isinstance(line, bytes):
        line = line.decode('utf-8', errors='replace')
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise error_cls(f"cannot parse planner message: {line[:200]!r}") from exc
    if not isinstance(data, dict):
        raise error_cls(f"planner message must be a JSON object, got {line[:200]!r}")
    _check_version(data, error_cls)
    return data


def _request_id(data: dict, error_cls) -> int | None:
    value = data.get('request_id')
    if value is not None and (not isinstance(value, int) or isinstance(value, bool)):
        raise error_cls(f"request_id must be an integer, got {value!r}")
    return value


def request_id_of(line: str | bytes) -> int | None:
    '''
    The ``request_id`` of a planner message, or ``None`` when it has none or
    cannot be parsed
    '''
    if isinstance(line, bytes):
        line = line.decode('utf-8', errors='replace')
    try:
        data = json.loads(line)
    except json.JSONDecodeError:
        return None
    if not isinstance(data, dict):
        return None
    try:
        return _request_id(data, InvalidInputError)
    except InvalidInputError:
        return None


def _kind(value: Any, error_cls) -> QuestionKind:
    try:
        return QuestionKind(value)
    except ValueError as exc:
        raise error_cls(f"unknown question kind {value!r}") from exc


def encode_query(query: PlannerQuery) -> str:
    '''
    One-line JSON request: ``{version, question_kind, scene, goal, subtask, request_id}``
    '''
    return json.dumps({
        'version': str(WIRE_VERSION),
        'question_kind': query.kind.value,
        'scene': query.scene,
        'goal': None if query.goal is None else query.goal.to_dict(),
        'subtask': None if query.subtask is None else query.subtask.to_dict(),
        'request_id': query.request_id,
    }, sort_keys=True)


def decode_query(line: str | bytes) -> PlannerQuery:
    '''
    :raises: InvalidInputError for a malformed or incompatible request.
    '''
    data = _parse_line(line, InvalidInputError)
    kind = _kind(data.get('question_kind'), InvalidInputError)
    scene = data.get('scene')
    if not isinstance(scene, dict):
        raise InvalidInputError("request scene must be an object")
    goal = data.get('goal')
    subtask = data.get('subtask')
    return PlannerQuery(kind, scene,
                        None if goal is None else Goal.from_dict(goal),
                        None if subtask is None else SubTask.from_dict(subtask),
                        _request_id(data, InvalidInputError))


def encode_response(response: PlannerResponse) -> str:
    data: dict[str, Any] = {
        'version': str(WIRE_VERSION),
        'question_kind': response.kind.value,
        'payload': response.payload,
    }
    if response.request_id is not None:
        data['request_id'] = response.request_id
    return json.dumps(data, sort_keys=True)


def encode_error(message: str, request_id: int | None = None) -> str:
    data: dict[str, Any] = {'version': str(WIRE_VERSION), 'error': message}
    if request_id is not None:
        data['request_id'] = request_id
    return json.dumps(data, sort_keys=True)


def decode_response(line: str | bytes) -> PlannerResponse:
    '''
    :raises: PlannerError when the planner reported an error, MalformedResponse
        when the line cannot be understood.
    '''
    data = _parse_line(line, MalformedResponse)
    if 'error' in data:
        raise PlannerError(f"planner reported: {data['error']}")
    if 'payload' not in data:
        raise MalformedResponse("planner response has no payload")
    return PlannerResponse(_kind(data.get('question_kind'), MalformedResponse), data['payload'],
                           _request_id(data, MalformedResponse))


class PlannerWorker:
    '''
    Answer line-delimited planner requests from a stream

    Each input line is one request; each gets exactly one output line, a
    response or an error document.  ``{"eof": true}`` or end of input stops
    the loop.
    '''

    def __init__(self, planner, _input=None, _output=None):
        if _input is None:
            _input = sys.stdin
        if _output is None:
            _output = sys.stdout
        self.planner = planner
        self._input = _input
        self._output = _output
        self.answered = 0
        self.errors = 0

    def _write(self, line: str) -> None:
        self._output.write(line + '\n')
        self._output.flush()

    def handle(self, line: str | bytes) -> str:
        try:
            query = decode_query(line)
            response = self.planner.ask(query)
        except CrossLabException as exc:
            self.errors += 1
            debug(f"planner request failed: {exc}")
            return encode_error(str(exc), request_id_of(line))
        self.answered += 1
        return encode_response(PlannerResponse(response.kind, response.payload, query.request_id))

    def run(self) -> int:
        for line in self._input:
            if isinstance(line, bytes):
                line = line.decode('utf-8', errors='replace')
            if not line.strip():
                continue
            try:
                if json.loads(line).get('eof'):
                    break
            except (json.JSONDecodeError, AttributeError):
                pass
            self._write(self.handle(line))
        return 1 if self.errors and not self.answered else 0
