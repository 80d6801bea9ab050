from __future__ import annotations

import csv
import fcntl
import hashlib
import io
import os
import signal
import stat
import threading

from collections.abc import Callable, Iterable, Sequence
from typing import Any

from crosslab.exceptions import ConfigurationError


def dump_artifact(obj: str | bytes,
                  path: str,
                  filename: str) -> str:
    '''
    Write the artifact to disk at the specified path

    The content is written to a temporary file under an exclusive lock and
    renamed into place, so readers never see a partial artifact.  Writing
    identical content again is a no-op.

    :param obj: The text or bytes to be dumped to disk.
    :param str path: The full path to the artifacts directory.
    :param str filename: The name of file to write the artifact to.

    :return: The full path filename for the artifact that was generated.

    :raises: ConfigurationError naming the path and cause on IO failure.
    '''
    data = obj.encode('utf-8') if isinstance(obj, str) else obj
    fn = os.path.join(path, filename)
    try:
        if not os.path.exists(path):
            os.makedirs(path, mode=0o700)

        if os.path.exists(fn):
            with open(fn, 'rb') as f:
                if hashlib.sha1(f.read()).hexdigest() == hashlib.sha1(data).hexdigest():
                    return fn

        lock_fp = os.path.join(path, '.artifact_write_lock')
        lock_fd = os.open(lock_fp, os.O_RDWR | os.O_CREAT, stat.S_IRUSR | stat.S_IWUSR)
        fcntl.lockf(lock_fd, fcntl.LOCK_EX)
        try:
            tmp = fn + '.tmp'
            with open(tmp, 'wb') as f:
                os.chmod(tmp, stat.S_IRUSR | stat.S_IWUSR)
                f.write(data)
            os.replace(tmp, fn)
        finally:
            fcntl.lockf(lock_fd, fcntl.LOCK_UN)
            os.close(lock_fd)
            try:
                os.remove(lock_fp)
            except FileNotFoundError:
                pass
    except OSError as exc:
        raise ConfigurationError(f"failed writing artifact {fn}: {exc}") from exc

    return fn


def format_cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(columns: Sequence[str], rows: Iterable[dict | Sequence]) -> str:
    '''
    Render rows as CSV text with a fixed column order

    Rows may be mappings (looked up by column name) or sequences (taken in
    column order).  Floats use their shortest round-tripping repr so that
    reruns compare byte for byte.
    '''
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        if isinstance(row, dict):
            values = [row.get(c, '') for c in columns]
        else:
            values = list(row)
            if len(values) != len(columns):
                raise ValueError(f"row has {len(values)} cells, expected {len(columns)}")
        writer.writerow([format_cell(v) for v in values])
    return buf.getvalue()


def write_csv(path: str, filename: str, columns: Sequence[str], rows: Iterable[dict | Sequence]) -> str:
    return dump_artifact(render_csv(columns, rows), path, filename)


def append_csv_row(fn: str, columns: Sequence[str], row: dict) -> None:
    '''
    Append one row to a CSV file, writing the header first if the file is new
    '''
    new_file = not os.path.exists(fn)
    try:
        with open(fn, 'a', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            if new_file:
                writer.writerow(columns)
            writer.writerow([format_cell(row.get(c, '')) for c in columns])
    except OSError as exc:
        raise ConfigurationError(f"failed writing {fn}: {exc}") from exc


def read_csv(fn: str) -> tuple[list[str], list[list[str]]]:
    with open(fn, newline='') as f:
        reader = csv.reader(f)
        rows = list(reader)
    if not rows:
        return [], []
    return rows[0], rows[1:]


def signal_handler() -> Callable[[], bool] | None:
    # Only the main thread is allowed to set a new signal handler
    # pylint: disable=W4902
    if threading.current_thread() is not threading.main_thread():
        return None

    signal_event = threading.Event()

    def _handler(number, frame):
        # pylint: disable=W0613
        signal_event.set()

    signal.signal(signal.SIGTERM, _handler)
    signal.signal(signal.SIGINT, _handler)

    return signal_event.is_set
