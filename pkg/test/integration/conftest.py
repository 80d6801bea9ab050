import json
import os
import subprocess
import sys

import pytest
import yaml


class CompletedProcessProxy:

    def __init__(self, result):
        self.result = result

    def __getattr__(self, attr):
        return getattr(self.result, attr)

    @property
    def json(self):
        try:
            response_json = json.loads(self.stdout)
        except json.JSONDecodeError:
            pytest.fail(
                f"Unable to convert the response to a valid json - stdout: {self.stdout}, stderr: {self.stderr}"
            )
        return response_json

    @property
    def yaml(self):
        return yaml.safe_load(self.stdout)


SRC = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))), 'src')
PLANNER_COMMAND = f"{sys.executable} -m crosslab serve-planner"


@pytest.fixture(scope='function')
def cli(tmp_path):
    def run(args, *a, **kw):
        args = [sys.executable, '-m', 'crosslab'] + [str(arg) for arg in args]
        kw['encoding'] = 'utf-8'
        if 'check' not in kw:
            # By default we want to fail if a command fails to run. Tests that
            # want to skip this can pass check=False when calling this fixture
            kw['check'] = True
        kw.setdefault('stdout', subprocess.PIPE)
        kw.setdefault('stderr', subprocess.PIPE)
        kw.setdefault('cwd', str(tmp_path))
        kw.setdefault('timeout', 600)

        kw.setdefault('env', os.environ.copy()).update({
            'LANG': 'en_US.UTF-8',
            'PYTHONPATH': os.pathsep.join(p for p in (SRC, os.environ.get('PYTHONPATH')) if p),
        })

        try:
            ret = CompletedProcessProxy(subprocess.run(args, check=kw.pop('check'), *a, **kw))
        except subprocess.CalledProcessError as err:
            pytest.fail(
                f"Running {err.cmd} resulted in a non-zero return code: {err.returncode} - stdout: {err.stdout}, stderr: {err.stderr}"
            )

        return ret
    return run


@pytest.fixture
def planner_command(monkeypatch):
    monkeypatch.setenv('PYTHONPATH', os.pathsep.join(p for p in (SRC, os.environ.get('PYTHONPATH')) if p))
    return PLANNER_COMMAND
