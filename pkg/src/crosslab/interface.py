#
# Licensed under the Apache License, Version 2.0 (the "License"); you may
# not use this file except in compliance with the License.  You may obtain
# a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
from __future__ import annotations

import logging
import os
import sys

from collections.abc import Sequence

from crosslab import output
from crosslab.config import RunConfig, load_config
from crosslab.evaluation.metrics import ABLATION_SCHEDULES, METRICS_COLUMNS, MetricsTable, compare_golden
from crosslab.exceptions import CheckpointNotFound
from crosslab.runner import Runner, RunOutput
from crosslab.utils import dump_artifact, signal_handler

logging.getLogger('crosslab').addHandler(logging.NullHandler())

GOLDEN_MISMATCH_RC = 3


def resolve_config(config: RunConfig | str | None = None, **overrides) -> RunConfig:
    '''
    A RunConfig from an instance, a file path or the defaults, with dotted overrides applied
    '''
    if not isinstance(config, RunConfig):
        config = load_config(config)
    if any(v is not None for v in overrides.values()):
        config = config.override(**overrides)
    return config


def require_checkpoint(path: str | None, what: str = 'checkpoint') -> str:
    if not path or not os.path.isfile(path):
        raise CheckpointNotFound(f"{what} not found: {path or '(none given)'}")
    return path


def init_runner(command: str, config: RunConfig, arguments: dict | None = None, checkpoints: Sequence[str] = (),
                **kwargs) -> Runner:
    '''
    Initialize the Runner() instance shared by every command

    Accepts the ``debug``, ``logfile``, ``ignore_logging``, ``event_handler``,
    ``status_handler``, ``artifacts_handler``, ``cancel_callback`` and
    ``finished_callback`` keywords.
    '''
    debug = kwargs.pop('debug', None)
    logfile = kwargs.pop('logfile', None)
    if not kwargs.pop('ignore_logging', True):
        output.configure()
        if debug in (True, False):
            output.set_debug('enable' if debug is True else 'disable')
        if logfile:
            output.set_logfile(logfile)

    cancel_callback = kwargs.pop('cancel_callback', None)
    if cancel_callback is None:
        # None outside the main thread
        cancel_callback = signal_handler()

    return Runner(config, command, arguments=arguments, checkpoints=checkpoints,
                  event_handler=kwargs.pop('event_handler', None),
                  status_handler=kwargs.pop('status_handler', None),
                  artifacts_handler=kwargs.pop('artifacts_handler', None),
                  finished_callback=kwargs.pop('finished_callback', None),
                  cancel_callback=cancel_callback)


def _training_output(runner: Runner, result) -> RunOutput:
    runner.canceled = runner.canceled or result.canceled
    files = {'checkpoint': result.checkpoint} if result.checkpoint else {}
    return RunOutput(result.columns, result.rows, result.episodes, files, result)


def _golden_rc(text: str, golden: str | None) -> int:
    if not golden:
        return 0
    diff = compare_golden(text, golden)
    if diff:
        output.display('\n'.join(diff))
        return GOLDEN_MISMATCH_RC
    return 0


def gen_terrain(category: str, level: int, seed: int, out: str, config: RunConfig | str | None = None) -> str:
    '''
    Generate one terrain tile and write it in the heightfield text format

    :return: the full path of the written file.
    '''
    # pylint: disable=C0415
    from crosslab.terrain import generate_tile, write_heightfield
    terrain = resolve_config(config).terrain
    tile = generate_tile(category, level, seed, cell_size=terrain.cell_size, start_zone=terrain.start_zone,
                         rough_frequency=terrain.rough_frequency)
    path = os.path.dirname(os.path.abspath(out))
    return write_heightfield(tile, path, os.path.basename(out))


def train_oracle(config: RunConfig | str | None = None, iterations: int | None = None, **kwargs) -> Runner:
    '''
    Run stage one in the foreground and return the finished Runner

    :param int iterations: overrides ``ppo.iterations``.
    '''
    # pylint: disable=C0415
    from crosslab.pas import stages
    from crosslab.pas.training import METRIC_COLUMNS
    config = resolve_config(config, **{'ppo.iterations': iterations})
    runner = init_runner('train-oracle', config, {'iterations': config.ppo.iterations}, **kwargs)

    def job(run: Runner) -> RunOutput:
        result = stages.train_oracle(config, run.artifact_dir, run.event_callback, run.cancel)
        return _training_output(run, result)

    runner.run(job, METRIC_COLUMNS)
    return runner


def train_pas(oracle_checkpoint: str | None = None, schedule: str | None = None,
              config: RunConfig | str | None = None, iterations: int | None = None, **kwargs) -> Runner:
    '''
    Run stage two (probability annealing selection) from an oracle checkpoint

    :param str schedule: e.g. ``exp:0.9998``, ``cosine``, ``linear`` or ``none``;
        defaults to ``pas.schedule``.

    :raises: CheckpointNotFound before anything is written when the oracle is missing.
    '''
    # pylint: disable=C0415
    from crosslab.pas import stages
    from crosslab.pas.training import METRIC_COLUMNS
    config = resolve_config(config, **{'pas.iterations': iterations, 'pas.schedule': schedule,
                                       'pas.oracle_checkpoint': oracle_checkpoint})
    oracle = require_checkpoint(config.pas.oracle_checkpoint, 'oracle checkpoint')
    runner = init_runner('train-pas', config, {'oracle_checkpoint': oracle, 'schedule': config.pas.schedule,
                                               'iterations': config.pas.iterations}, [oracle], **kwargs)

    def job(run: Runner) -> RunOutput:
        result = stages.train_deploy(oracle, config.pas.schedule, config, run.artifact_dir, run.event_callback,
                                     run.cancel)
        return _training_output(run, result)

    runner.run(job, METRIC_COLUMNS)
    return runner


def train_baseline(kind: str | None = None, config: RunConfig | str | None = None,
                   oracle_checkpoint: str | None = None, **kwargs) -> Runner:
    '''
    Train one of the comparison policies (``blind``, ``concurrent``, ``il``, ``rma``)
    '''
    # pylint: disable=C0415
    from crosslab.pas.baselines import SUPERVISED_COLUMNS, train_baseline as _train
    from crosslab.pas.training import METRIC_COLUMNS
    config = resolve_config(config, **{'pas.baseline': kind, 'pas.oracle_checkpoint': oracle_checkpoint})
    kind = config.pas.baseline
    oracle = None
    if kind in ('il', 'rma'):
        oracle = require_checkpoint(config.pas.oracle_checkpoint, 'oracle checkpoint')
    runner = init_runner('train-baseline', config, {'kind': kind, 'oracle_checkpoint': oracle},
                         [oracle] if oracle else [], **kwargs)

    def job(run: Runner) -> RunOutput:
        result = _train(kind, config, oracle, run.artifact_dir, run.event_callback, run.cancel)
        return _training_output(run, result)

    runner.run(job, SUPERVISED_COLUMNS if oracle else METRIC_COLUMNS)
    return runner


def train_terrain_estimator(policy_checkpoint: str | None = None, config: RunConfig | str | None = None,
                            **kwargs) -> Runner:
    '''
    Train the plane-versus-terrain classifier on a deploy policy's rollouts
    '''
    # pylint: disable=C0415
    from crosslab.pas.terrain_estimator import ESTIMATOR_COLUMNS, train_terrain_estimator as _train
    config = resolve_config(config, **{'pas.policy_checkpoint': policy_checkpoint})
    policy = require_checkpoint(config.pas.policy_checkpoint, 'policy checkpoint')
    runner = init_runner('train-terrain-estimator', config, {'policy_checkpoint': policy}, [policy], **kwargs)

    def job(run: Runner) -> RunOutput:
        return _training_output(run, _train(policy, config, run.artifact_dir, run.event_callback))

    runner.run(job, ESTIMATOR_COLUMNS)
    return runner


def evaluate(checkpoint: str | None = None, config: RunConfig | str | None = None, tiles=None,
             episodes: int | None = None, golden: str | None = None, **kwargs) -> Runner:
    '''
    Success rate and tracking ratios of a policy checkpoint

    The table has one ``all`` row and one row per terrain category.  With
    ``golden`` the rendered table is compared to a committed copy and a
    mismatch ends the run with rc 3.

    :raises: CheckpointNotFound when the checkpoint is missing.
    '''
    # pylint: disable=C0415
    from crosslab.evaluation.episodes import run_episodes
    from crosslab.pas.inference import PolicyRunner, load_policy
    from crosslab.pas.training import make_world
    config = resolve_config(config, **{'eval.checkpoint': checkpoint, 'eval.episodes': episodes,
                                       'eval.golden': golden})
    path = require_checkpoint(config.eval.checkpoint)
    tiles = tiles or [(name, config.terrain.max_level) for name in config.terrain.categories]
    runner = init_runner('eval', config, {'checkpoint': path, 'episodes': config.eval.episodes,
                                          'tiles': [list(t) for t in tiles]}, [path], **kwargs)

    def job(run: Runner) -> RunOutput:
        policy, _ = load_policy(path, config.streams, config.ppo.action_scale)
        records = run_episodes(PolicyRunner(policy, 1), make_world(config), config, tiles, config.eval.episodes)
        table = MetricsTable()
        table.add('all', records)
        for category in dict.fromkeys(str(r.category) for r in records):
            table.add(category, [r for r in records if str(r.category) == category])
        rc = _golden_rc(table.to_csv(), config.eval.golden)
        return RunOutput(METRICS_COLUMNS, table.rows, records, result=table, rc=rc)

    runner.run(job, METRICS_COLUMNS)
    return runner


def ablate(oracle_checkpoint: str | None = None, schedules: Sequence[str] = ABLATION_SCHEDULES,
           config: RunConfig | str | None = None, golden: str | None = None, **kwargs) -> Runner:
    '''
    Train and evaluate the second stage under each annealing schedule

    Writes the metrics table and ``schedules.csv`` with every schedule's
    probability curve.
    '''
    # pylint: disable=C0415
    from crosslab.evaluation.metrics import ablation_table, schedule_curves
    from crosslab.pas.anneal import parse_schedule
    config = resolve_config(config, **{'pas.oracle_checkpoint': oracle_checkpoint, 'eval.golden': golden})
    oracle = require_checkpoint(config.pas.oracle_checkpoint, 'oracle checkpoint')
    iterations = config.pas.iterations
    parsed = [parse_schedule(s, iterations) for s in schedules]
    runner = init_runner('ablate', config, {'oracle_checkpoint': oracle, 'schedules': list(schedules)},
                         [oracle], **kwargs)

    def job(run: Runner) -> RunOutput:
        curves = dump_artifact(schedule_curves(parsed, iterations), run.artifact_dir, 'schedules.csv')
        table = ablation_table(parsed, config, oracle, output_dir=run.artifact_dir)
        rc = _golden_rc(table.to_csv(), config.eval.golden)
        return RunOutput(METRICS_COLUMNS, table.rows, files={'schedules': curves}, result=table, rc=rc)

    runner.run(job, METRICS_COLUMNS)
    return runner


def _policy_factories(config: RunConfig):
    # pylint: disable=C0415
    from crosslab.nav.controllers import ClassifierTerrainStream, PolicyController
    from crosslab.net.checkpoint import load_checkpoint
    from crosslab.pas.inference import load_policy
    nav = config.nav
    controller_factory = terrain_factory = None
    if nav.controller == 'policy':
        policy, _ = load_policy(require_checkpoint(nav.policy_checkpoint, 'policy checkpoint'),
                                config.streams, config.ppo.action_scale)

        def controller_factory(scene):
            return PolicyController(scene.world, policy, config.env)

        if nav.terrain_checkpoint:
            classifier = load_checkpoint(require_checkpoint(nav.terrain_checkpoint, 'terrain checkpoint'),
                                         stage='terrain_estimator').networks['classifier']

            def terrain_factory(scene, controller):
                return ClassifierTerrainStream(classifier, policy)

    return controller_factory, terrain_factory


def navigate(config: RunConfig | str | None = None, scenarios=None, trials: int | None = None,
             golden: str | None = None, **kwargs) -> Runner:
    '''
    End-to-end navigation benchmark over a scenario set

    :param scenarios: Scenario objects or scenario file paths; defaults to
        ``eval.scenarios``, or one scenario per intermediation kind and route
        direction.

    Writes the success table as the metrics CSV and every trial to ``trials.csv``.
    '''
    # pylint: disable=C0415
    from crosslab.evaluation.navigation import NAV_COLUMNS, navigation_benchmark
    from crosslab.nav.scenarios import load_scenario, scenarios_from_config
    config = resolve_config(config, **{'eval.trials': trials, 'eval.golden': golden})
    if scenarios is None:
        scenarios = scenarios_from_config(config.eval)
    else:
        scenarios = [load_scenario(s) if isinstance(s, str) else s for s in scenarios]
    controller_factory, terrain_factory = _policy_factories(config)
    checkpoints = [p for p in (config.nav.policy_checkpoint, config.nav.terrain_checkpoint) if p]
    runner = init_runner('navigate', config, {'scenarios': [s.to_dict() for s in scenarios],
                                              'trials': config.eval.trials}, checkpoints, **kwargs)

    def job(run: Runner) -> RunOutput:
        report = navigation_benchmark(scenarios, config, controller_factory=controller_factory,
                                      terrain_factory=terrain_factory, on_trial=lambda t: run.event_callback(t.row()))
        trials_file = dump_artifact(report.trials_csv(), run.artifact_dir, 'trials.csv')
        rc = _golden_rc(report.to_csv(), config.eval.golden)
        return RunOutput(NAV_COLUMNS, report.rows, files={'trials': trials_file}, result=report, rc=rc)

    # per-trial rows go to the handler only; the metrics CSV holds the table
    runner.run(job)
    return runner


def serve_planner(config: RunConfig | str | None = None, _input=None, _output=None) -> int:
    '''
    Answer planner queries on stdin/stdout with the rule-based planner

    :return: the worker's exit status.
    '''
    # pylint: disable=C0415
    from crosslab.nav.planner import MockPlanner
    from crosslab.streaming import PlannerWorker
    config = resolve_config(config)
    worker = PlannerWorker(MockPlanner.from_config(config.nav), _input or sys.stdin, _output or sys.stdout)
    return worker.run()
