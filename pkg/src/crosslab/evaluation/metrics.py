from __future__ import annotations

import difflib
import logging
import math
import os

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from crosslab.evaluation.records import EpisodeRecord, tracking_ratios
from crosslab.exceptions import ConfigurationError
from crosslab.pas.anneal import AnnealSchedule, parse_schedule, schedule_curve
from crosslab.utils import render_csv

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ('configuration', 'episodes', 'success_rate', 'lin_tracking', 'ang_tracking')
ABLATION_SCHEDULES = ('exp:0.9998', 'exp:0.9995', 'none', 'cosine', 'linear')


@dataclass
class MetricsTable:
    '''
    One row per configuration: success rate and mean tracking ratios
    '''
    rows: list = field(default_factory=list)

    def add(self, label: str, records: Sequence[EpisodeRecord]) -> dict:
        row = metrics_row(label, records)
        self.rows.append(row)
        return row

    def to_csv(self) -> str:
        return render_csv(METRICS_COLUMNS, self.rows)

    def __len__(self) -> int:
        return len(self.rows)


def metrics_row(label: str, records: Sequence[EpisodeRecord]) -> dict:
    '''
    Aggregate episodes into one table row; episodes without steps add no tracking ratio
    '''
    ratios = [tracking_ratios(r) for r in records if r.steps]
    return {
        'configuration': label,
        'episodes': len(records),
        'success_rate': sum(1 for r in records if r.success) / len(records) if records else math.nan,
        'lin_tracking': float(np.mean([lin for lin, _ in ratios])) if ratios else math.nan,
        'ang_tracking': float(np.mean([ang for _, ang in ratios])) if ratios else math.nan,
    }


def schedule_curves(schedules: Sequence[AnnealSchedule], iterations: int) -> str:
    '''
    CSV of every schedule's probability at each iteration
    '''
    columns = ('iteration', *(s.label for s in schedules))
    curves = [schedule_curve(s, iterations) for s in schedules]
    rows = [(i, *(float(c[i]) for c in curves)) for i in range(iterations)]
    return render_csv(columns, rows)


def curve_shape(values, tolerance: float = 1e-12) -> str:
    '''
    ``convex``, ``concave``, ``linear`` or ``mixed`` from the signs of the second differences
    '''
    second = np.diff(np.asarray(values, dtype=np.float64), n=2)
    if second.size == 0 or np.all(np.abs(second) <= tolerance):
        return 'linear'
    if np.all(second >= -tolerance):
        return 'convex'
    if np.all(second <= tolerance):
        return 'concave'
    return 'mixed'


def ablation_table(schedules: Sequence[str | AnnealSchedule] = ABLATION_SCHEDULES, config=None,
                   oracle_ckpt: str | None = None, tiles=None, output_dir: str | None = None,
                   on_iteration=None) -> MetricsTable:
    '''
    Train the second stage under each schedule and evaluate it

    Every schedule runs from the same oracle checkpoint and the same seed
    streams, so the rows are seed-paired.  With ``output_dir`` each run's
    checkpoint goes into a subdirectory named after the schedule.
    '''
    from crosslab.evaluation.episodes import run_episodes  # pylint: disable=C0415
    from crosslab.pas.inference import PolicyRunner  # pylint: disable=C0415
    from crosslab.pas.policies import DeployPolicy  # pylint: disable=C0415
    from crosslab.pas.stages import train_deploy  # pylint: disable=C0415
    from crosslab.pas.training import make_world  # pylint: disable=C0415

    iterations = config.pas.iterations
    parsed = [parse_schedule(s, iterations) if isinstance(s, str) else s for s in schedules]
    tiles = tiles or [(name, config.terrain.max_level) for name in config.terrain.categories]
    world = make_world(config)
    table = MetricsTable()
    for schedule in parsed:
        target = os.path.join(output_dir, schedule.label.replace(':', '_')) if output_dir else None
        result = train_deploy(oracle_ckpt, schedule, config, checkpoint_dir=target, on_iteration=on_iteration)
        policy = DeployPolicy(result.networks, None, 0.0, config.ppo.action_scale)
        records = run_episodes(PolicyRunner(policy, 1), world, config, tiles, config.eval.episodes)
        row = table.add(schedule.label, records)
        logger.info("schedule %s: success %.3f lin %.3f", schedule.label, row['success_rate'], row['lin_tracking'])
    return table


def compare_golden(text: str, golden_path: str) -> list[str]:
    '''
    Unified diff between a rendered table and its committed golden copy

    :return: an empty list when they match.

    :raises: ConfigurationError when the golden file cannot be read.
    '''
    try:
        with open(golden_path) as f:
            golden = f.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read golden table {golden_path}: {exc}") from exc
    if golden == text:
        return []
    return list(difflib.unified_diff(golden.splitlines(), text.splitlines(),
                                     fromfile=golden_path, tofile='current', lineterm=''))
