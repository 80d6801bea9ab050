import math

import pytest

from crosslab.evaluation import EpisodeRecord, MetricsTable, compare_golden, curve_shape, metrics_row, tracking_ratios
from crosslab.evaluation import schedule_curves
from crosslab.exceptions import ConfigurationError, InvalidInputError
from crosslab.pas import parse_schedule, schedule_curve


def record(status='timeout', steps=()):
    rec = EpisodeRecord(env_id=0, category='flat', level=0, seed=1)
    for command, velocity in steps:
        rec.record_step(command, velocity)
    rec.finish(status, 0.02 * len(steps), 1.0)
    return rec


def test_perfect_tracking():
    rec = record(steps=[((0.5, 0.0, 0.2), (0.5, 0.0, 0.2))] * 3)
    assert tracking_ratios(rec) == (1.0, 1.0)


def test_tracking_ratio_of_half_metre_error():
    # squared error 0.25 gives exp(-1)
    rec = record(steps=[((0.5, 0.0, 0.0), (0.0, 0.0, 0.5))])
    lin, ang = tracking_ratios(rec)
    assert lin == pytest.approx(math.exp(-1.0))
    assert ang == pytest.approx(math.exp(-1.0))


def test_tracking_needs_steps():
    with pytest.raises(InvalidInputError):
        tracking_ratios(record())


def test_unknown_status():
    with pytest.raises(InvalidInputError):
        EpisodeRecord(0, 'flat', 0, 1, status='exploded')
    with pytest.raises(InvalidInputError):
        record(status='exploded')


def test_row_of_empty_episode():
    row = record('fault').row()
    assert row[4:7] == ('fault', 0, 0)
    assert math.isnan(row[-1])


def test_metrics_row():
    good = record('edge_reached', [((1.0, 0.0, 0.0), (1.0, 0.0, 0.0))])
    bad = record('fall_roll', [((1.0, 0.0, 0.0), (0.5, 0.0, 0.0))])
    row = metrics_row('oracle', [good, bad, record('fault')])
    assert row['episodes'] == 3
    assert row['success_rate'] == pytest.approx(1 / 3)
    assert row['lin_tracking'] == pytest.approx((1.0 + math.exp(-1.0)) / 2)
    empty = metrics_row('none', [])
    assert math.isnan(empty['success_rate'])


def test_metrics_table_csv():
    table = MetricsTable()
    table.add('all', [record(steps=[((0.0, 0.0, 0.0), (0.0, 0.0, 0.0))])])
    assert table.to_csv() == ('configuration,episodes,success_rate,lin_tracking,ang_tracking\n'
                              'all,1,1.0,1.0,1.0\n')
    assert len(table) == 1


@pytest.mark.parametrize('text, shape', (
    ('exp:0.9', 'convex'),
    ('linear', 'linear'),
    ('none', 'linear'),
    ('cosine', 'mixed'),
))
def test_curve_shapes(text, shape):
    assert curve_shape(schedule_curve(parse_schedule(text, 20), 21)) == shape


def test_schedule_curves_csv():
    text = schedule_curves([parse_schedule('linear', 4), parse_schedule('none', 4)], 3)
    assert text.splitlines() == ['iteration,linear,none', '0,1.0,0.0', '1,0.75,0.0', '2,0.5,0.0']


def test_compare_golden(tmp_path):
    golden = tmp_path / 'golden.csv'
    golden.write_text('a,b\n1,2\n')
    assert compare_golden('a,b\n1,2\n', str(golden)) == []
    diff = compare_golden('a,b\n1,3\n', str(golden))
    assert '-1,2' in diff and '+1,3' in diff
    with pytest.raises(ConfigurationError, match='cannot read golden'):
        compare_golden('', str(tmp_path / 'missing.csv'))
