from __future__ import annotations

import datetime
import logging
import os
import stat
import traceback

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import yaml

from crosslab import defaults
from crosslab.config import dump_config
from crosslab.exceptions import CallbackError, ConfigurationError, CrossLabException, TrainingDivergence
from crosslab.output import debug
from crosslab.utils import append_csv_row, dump_artifact, write_csv
from crosslab.utils.seeding import SUBSTREAMS

logger = logging.getLogger('crosslab')


def format_versions() -> dict[str, str]:
    # pylint: disable=C0415
    from crosslab import __version__
    return {
        'crosslab': __version__,
        'checkpoint_format': defaults.CHECKPOINT_FORMAT_VERSION,
        'planner_wire': defaults.PLANNER_WIRE_VERSION,
    }


@dataclass
class RunManifest:
    '''
    Everything needed to regenerate a run's results

    Written once into the artifact directory before the run starts; a
    second write is refused.
    '''
    command: str
    arguments: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    versions: dict = field(default_factory=format_versions)
    seeds: dict = field(default_factory=dict)
    checkpoints: list = field(default_factory=list)
    metric_files: list = field(default_factory=list)
    created: str = ''

    @classmethod
    def for_run(cls, command: str, config, arguments: dict | None = None,
                checkpoints: Sequence[str] = (), metric_files: Sequence[str] = ()) -> RunManifest:
        return cls(
            command=command,
            arguments=dict(arguments or {}),
            config=yaml.safe_load(dump_config(config)),
            seeds={'master': config.seed, **{name: config.streams.seed(name) for name in SUBSTREAMS}},
            checkpoints=list(checkpoints),
            metric_files=list(metric_files),
            created=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            'command': self.command,
            'arguments': self.arguments,
            'config': self.config,
            'versions': self.versions,
            'seeds': self.seeds,
            'checkpoints': self.checkpoints,
            'metric_files': self.metric_files,
            'created': self.created,
        }

    def write(self, path: str, filename: str = defaults.MANIFEST_FILE) -> str:
        fn = os.path.join(path, filename)
        if os.path.exists(fn):
            raise CrossLabException(f"run manifest {fn} already exists and cannot be rewritten")
        return dump_artifact(yaml.safe_dump(self.to_dict(), sort_keys=False), path, filename)

    @classmethod
    def load(cls, fn: str) -> RunManifest:
        try:
            with open(fn) as f:
                data = yaml.safe_load(f)
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigurationError(f"cannot read run manifest {fn}: {exc}") from exc
        if not isinstance(data, dict) or 'command' not in data:
            raise ConfigurationError(f"{fn} is not a run manifest")
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def write_logs(path: str, columns: Sequence[str], rows, records=(), manifest: RunManifest | None = None) -> dict[str, str]:
    '''
    Write the metrics CSV, the episode CSV and (if not there yet) the manifest

    Zero rows or records still produce the header line.

    :return: a dict of the written file names keyed ``metrics``, ``episodes``
        and ``manifest``.

    :raises: ConfigurationError naming the path and cause on IO failure.
    '''
    # pylint: disable=C0415
    from crosslab.evaluation.records import EPISODE_COLUMNS
    files = {
        'metrics': write_csv(path, defaults.METRICS_FILE, columns, rows),
        'episodes': write_csv(path, defaults.EPISODES_FILE, EPISODE_COLUMNS, [r.row() for r in records]),
    }
    fn = os.path.join(path, defaults.MANIFEST_FILE)
    if manifest is not None and not os.path.exists(fn):
        manifest.write(path)
    if os.path.exists(fn):
        files['manifest'] = fn
    return files


@dataclass
class RunOutput:
    '''
    What a job hands back to the runner
    '''
    columns: Sequence[str] = ()
    rows: list = field(default_factory=list)
    records: list = field(default_factory=list)
    files: dict = field(default_factory=dict)
    result: Any = None
    rc: int = 0


class Runner:
    '''
    Life-cycle of one crosslab command

    The job runs inside ``run``; status moves ``starting → running`` and
    ends ``successful``, ``failed`` or ``canceled``.  Per-iteration rows
    reach ``event_handler`` and are appended to the metrics CSV as they
    arrive, so an interrupted run keeps its history.
    '''

    def __init__(self, config, command: str, arguments: dict | None = None, cancel_callback=None,
                 event_handler=None, artifacts_handler=None, finished_callback=None, status_handler=None,
                 checkpoints: Sequence[str] = ()):
        self.config = config
        self.command = command
        self.arguments = dict(arguments or {})
        self.cancel_callback = cancel_callback
        self.event_handler = event_handler
        self.artifacts_handler = artifacts_handler
        self.finished_callback = finished_callback
        self.status_handler = status_handler
        self.checkpoints = list(checkpoints)
        self.canceled = False
        self.errored = False
        self.status = 'unstarted'
        self.rc: int | None = None
        self.output: RunOutput | None = None
        self.exception: BaseException | None = None
        self.columns: Sequence[str] = ()
        self.manifest: RunManifest | None = None

    @property
    def artifact_dir(self) -> str:
        return self.config.artifact_dir

    @property
    def metrics_file(self) -> str:
        return os.path.join(self.artifact_dir, defaults.METRICS_FILE)

    def status_callback(self, status: str) -> None:
        self.status = status
        status_data = {'status': status, 'runner_ident': str(self.config.ident)}
        if status == 'starting':
            status_data.update({'command': self.command, 'arguments': self.arguments})
        if self.status_handler is not None:
            try:
                self.status_handler(status_data, runner_config=self.config)
            except Exception as exc:
                raise CallbackError(f"exception in status handler: {exc}") from exc

    def event_callback(self, row: dict) -> None:
        '''
        Invoked for every training iteration with its metrics row
        '''
        if self.columns:
            append_csv_row(self.metrics_file, self.columns, row)
        if self.event_handler is not None:
            try:
                self.event_handler(row)
            except Exception as exc:
                raise CallbackError(f"exception in event handler: {exc}") from exc

    def cancel(self) -> bool:
        if self.canceled:
            return True
        if self.cancel_callback is not None:
            try:
                self.canceled = bool(self.cancel_callback())
            except Exception as exc:
                raise CallbackError(f"exception in cancel callback: {exc}") from exc
        return self.canceled

    def run(self, job: Callable[[Runner], RunOutput], columns: Sequence[str] = ()) -> tuple[str, int]:
        '''
        Prepare the artifact directory, write the manifest, run ``job`` and record its outcome

        :return: the final ``(status, rc)``.
        '''
        self.columns = tuple(columns)
        self.status_callback('starting')
        self.config.prepare()
        metric_files = [self.metrics_file, os.path.join(self.artifact_dir, defaults.EPISODES_FILE)]
        self.manifest = RunManifest.for_run(self.command, self.config, self.arguments,
                                            self.checkpoints, metric_files)
        self.manifest.write(self.artifact_dir)
        if os.path.exists(self.metrics_file):
            os.remove(self.metrics_file)

        self.status_callback('running')
        try:
            self.output = job(self)
            self.rc = self.output.rc
            if self.output.columns:
                self.output.files.update(write_logs(self.artifact_dir, self.output.columns, self.output.rows,
                                                    self.output.records))
        except CallbackError:
            raise
        except CrossLabException as exc:
            self.errored = True
            self.exception = exc
            self.rc = 2
            if isinstance(exc, TrainingDivergence):
                logger.error("training diverged after iteration %d: %s", exc.last_good_iteration, exc)
            debug(traceback.format_exc())

        if self.canceled:
            self.status_callback('canceled')
            self.rc = 254 if self.rc == 0 else self.rc
        elif self.rc == 0 and not self.errored:
            self.status_callback('successful')
        else:
            self.status_callback('failed')

        for filename, data in [('status', self.status), ('rc', self.rc)]:
            artifact_path = os.path.join(self.artifact_dir, filename)
            if not os.path.exists(artifact_path):
                os.close(os.open(artifact_path, os.O_CREAT, stat.S_IRUSR | stat.S_IWUSR))
            with open(artifact_path, 'w') as f:
                f.write(str(data))

        if self.artifacts_handler is not None:
            try:
                self.artifacts_handler(self.artifact_dir)
            except Exception as exc:
                raise CallbackError(f"exception in artifact handler: {exc}") from exc

        if self.finished_callback is not None:
            try:
                self.finished_callback(self)
            except Exception as exc:
                raise CallbackError(f"exception in finished callback: {exc}") from exc

        return self.status, self.rc
