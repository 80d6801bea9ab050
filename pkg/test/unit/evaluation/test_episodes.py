import pytest

from crosslab.evaluation.episodes import FixedTerrainSet, StandStillAgent, run_episodes, success_rate, tally
from crosslab.evaluation.records import STATUSES
from crosslab.sim.kinematics import NOMINAL_JOINTS
from crosslab.terrain.tiles import Category


@pytest.fixture
def short_config(small_config):
    return small_config.override(**{'env.episode_seconds': 0.2, 'env.stuck_enabled': False})


def test_terrain_set_cycles_tiles():
    tiles = FixedTerrainSet([('flat', 0), ('stairs_up', 3), (Category.ROUGH, 5)], 2)
    assert tiles.assignment(0) == (Category.FLAT, 0)
    assert tiles.assignment(1) == (Category.STAIRS_UP, 3)
    assert tiles.mean_level == 1.5
    assert tiles.update(0, 1.0, 1.0) == (Category.ROUGH, 5)
    assert tiles.update(1, 1.0, 1.0) == (Category.FLAT, 0)
    assert tiles.update(0, 0.0, 1.0) == (Category.STAIRS_UP, 3)


def test_terrain_set_must_not_be_empty():
    with pytest.raises(ValueError):
        FixedTerrainSet([], 2)


def test_stand_still_agent():
    actions = StandStillAgent().act({'proprio': [[0.0] * 45] * 3}, None)
    assert actions.shape == (3, 12)
    assert (actions == NOMINAL_JOINTS).all()


def test_run_episodes_returns_exact_count(world, short_config):
    records = run_episodes(StandStillAgent(), world, short_config, [('flat', 0)], 5)
    assert len(records) == 5
    assert records == sorted(records, key=lambda r: (r.env_id, r.seed))
    assert all(r.status in STATUSES and r.status != 'running' for r in records)
    assert all(r.category == 'flat' for r in records)


def test_run_episodes_is_reproducible(world, short_config):
    a = run_episodes(StandStillAgent(), world, short_config, [('flat', 0)], 3)
    b = run_episodes(StandStillAgent(), world, short_config, [('flat', 0)], 3)
    assert [r.row() for r in a] == [r.row() for r in b]


def test_run_episodes_resets_agent(world, short_config, mocker):
    agent = StandStillAgent()
    agent.reset = mocker.Mock()
    run_episodes(agent, world, short_config, [('flat', 0)], 1)
    agent.reset.assert_called_once_with(1)


def test_tally_counts_success(world, short_config):
    records = run_episodes(StandStillAgent(), world, short_config, [('flat', 0)], 4)
    counts = tally(records)
    assert counts['success'] == counts['timeout'] + counts['edge_reached']
    assert sum(v for k, v in counts.items() if k != 'success') == 4


def test_success_rate_in_unit_interval(world, short_config):
    rate = success_rate(StandStillAgent(), [('flat', 0)], 2, short_config, world=world)
    assert 0.0 <= rate <= 1.0
