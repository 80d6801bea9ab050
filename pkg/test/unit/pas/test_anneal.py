import math

import numpy as np
import pytest

from crosslab.exceptions import InvalidInputError
from crosslab.pas import AnnealSchedule, anneal_probability, parse_schedule, probability_select, schedule_curve
from crosslab.pas import selection_draw


def test_exponential_closed_form():
    schedule = parse_schedule('exp:0.9998')
    assert anneal_probability(schedule, 0) == 1.0
    assert anneal_probability(schedule, 10000) == pytest.approx(0.135326, abs=1e-6)


@pytest.mark.parametrize('text, iteration, expected', (
    ('cosine', 50, 0.5),
    ('cosine', 100, 0.0),
    ('cosine', 400, 0.0),
    ('linear', 25, 0.75),
    ('linear', 150, 0.0),
    ('none', 0, 0.0),
    ('noanneal', 10, 0.0),
))
def test_schedules(text, iteration, expected):
    assert anneal_probability(parse_schedule(text, 100), iteration) == pytest.approx(expected, abs=1e-12)


def test_curves_are_monotone():
    for text in ('exp:0.99', 'cosine', 'linear'):
        curve = schedule_curve(parse_schedule(text, 50), 60)
        assert np.all(np.diff(curve) <= 0.0)
        assert np.all((curve >= 0.0) & (curve <= 1.0))


@pytest.mark.parametrize('text', ('exp:1.5', 'exp:x', 'sigmoid', 'cosine:3', 'exp:0'))
def test_bad_schedules(text):
    with pytest.raises(ValueError):
        parse_schedule(text, 10)


def test_negative_iteration():
    with pytest.raises(InvalidInputError):
        anneal_probability(AnnealSchedule('exp'), -1)


def test_labels():
    assert parse_schedule('exponential:0.9').label == 'exp:0.9'
    assert parse_schedule('COS').label == 'cosine'


def test_selection_is_fixed_per_episode():
    draws = {selection_draw(0.5, 3, 1234) for _ in range(5)}
    assert len(draws) == 1
    assert selection_draw(1.0, 0, 1) is True
    assert selection_draw(0.0, 0, 1) is False


def test_selection_rate_matches_probability():
    hits = sum(selection_draw(0.3, env_id, 99) for env_id in range(4000))
    assert hits / 4000 == pytest.approx(0.3, abs=0.03)


def test_probability_select():
    predicted, true = np.zeros(36), np.ones(36)
    assert np.all(probability_select(predicted, true, 1.0, 0, 5) == 1.0)
    assert np.all(probability_select(predicted, true, 0.0, 0, 5) == 0.0)
    with pytest.raises(InvalidInputError):
        probability_select(np.zeros(35), true, 0.5, 0, 5)
    with pytest.raises(InvalidInputError):
        selection_draw(math.inf, 0, 5)
