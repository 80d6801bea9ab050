from __future__ import annotations

import logging

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

from crosslab.nav.controllers import GroundTruthTerrainStream, KinematicController, Localizer, ScriptedTerrainStream
from crosslab.nav.executor import NavResult, navigate
from crosslab.nav.planner import make_planner
from crosslab.nav.scenarios import Scenario
from crosslab.nav.scene import Scene
from crosslab.nav.types import Action
from crosslab.utils import render_csv

logger = logging.getLogger(__name__)

NAV_COLUMNS = ('scenario', 'terrain', 'direction', 'trials', 'success_rate', 'crossing_rate', 'noisy_success_rate')
NAV_TRIAL_COLUMNS = (
    'scenario', 'terrain', 'direction', 'trial', 'seed', 'noise', 'noisy', 'success', 'crossed',
    'skill_executions', 'steps', 'final_error', 'failure',
)
CROSSING_ACTIONS = (Action.CLIMB_ACROSS.value, Action.MOVE_ACROSS.value)


@dataclass
class NavTrial:
    scenario: str
    terrain: str
    direction: str
    trial: int
    seed: int
    noise: float
    success: bool
    crossed: bool
    skill_executions: int
    steps: int
    final_error: float
    failure: str = ''
    noisy: bool = False

    def row(self) -> dict:
        return {name: getattr(self, name) for name in NAV_TRIAL_COLUMNS}


def crossed_intermediation(result: NavResult) -> bool:
    '''
    Whether every crossing sub-task of the plan was judged finished

    A plan without crossing sub-tasks counts as crossed when it succeeded.
    '''
    crossing = [i for i, s in enumerate(result.plan) if s['action'] in CROSSING_ACTIONS]
    if not crossing:
        return result.success
    finished = {entry[0] for entry in result.trace
                if entry[2] == 'judge' and entry[3] == 'finished'}
    return all(i in finished for i in crossing)


def run_trial(scenario: Scenario, trial: int, seed: int, config, noise: float, noisy: bool = False,
              controller_factory: Callable[[Scene], object] | None = None, planner_factory=None,
              terrain_factory: Callable[[Scene, object], object] | None = None) -> NavTrial:
    '''
    One end-to-end navigation run of a scenario

    The localization noise stream depends only on the scene seed, so runs
    with and without noise are seed-paired.  Scripted terrain labels are
    replayed ahead of the ``terrain_factory`` stream (ground truth by default).
    '''
    nav = config.nav
    scene = scenario.build(nav, seed)
    planner = (planner_factory or make_planner)(nav, scenario.planner_script or None)
    localizer = Localizer(noise, config.streams.rng('noise', seed) if noise > 0 else None)
    if controller_factory is None:
        controller = KinematicController(scene.world, nav.max_step_height)
    else:
        controller = controller_factory(scene)
    if terrain_factory is None:
        stream = GroundTruthTerrainStream(scene.world)
    else:
        stream = terrain_factory(scene, controller)
    if scenario.terrain_stream:
        stream = ScriptedTerrainStream(scenario.terrain_stream, stream)
    with planner:
        result = navigate(scene, planner, nav, controller, stream, localizer)
    return NavTrial(scenario.name, scenario.terrain, scenario.direction, trial, seed, noise, result.success,
                    crossed_intermediation(result), result.skill_executions, result.steps,
                    round(result.final_error, 6), result.failure, noisy)


@dataclass
class NavigationReport:
    '''
    Per-trial outcomes and the success table derived from them
    '''
    trials: list = field(default_factory=list)

    def _rate(self, trials: Sequence[NavTrial]) -> float:
        return sum(1 for t in trials if t.success) / len(trials) if trials else 0.0

    def _row(self, label: str, terrain: str, direction: str, clean, noisy) -> dict:
        return {
            'scenario': label,
            'terrain': terrain,
            'direction': direction,
            'trials': len(clean),
            'success_rate': self._rate(clean),
            'crossing_rate': sum(1 for t in clean if t.crossed) / len(clean) if clean else 0.0,
            'noisy_success_rate': self._rate(noisy),
        }

    @property
    def rows(self) -> list[dict]:
        clean = [t for t in self.trials if not t.noisy]
        noisy = [t for t in self.trials if t.noisy]
        rows = []
        for name in dict.fromkeys(t.scenario for t in clean):
            first = next(t for t in clean if t.scenario == name)
            rows.append(self._row(name, first.terrain, first.direction,
                                  [t for t in clean if t.scenario == name],
                                  [t for t in noisy if t.scenario == name]))
        for terrain in dict.fromkeys(t.terrain for t in clean):
            rows.append(self._row(terrain, terrain, 'all', [t for t in clean if t.terrain == terrain],
                                  [t for t in noisy if t.terrain == terrain]))
        return rows

    def to_csv(self) -> str:
        return render_csv(NAV_COLUMNS, self.rows)

    def trials_csv(self) -> str:
        return render_csv(NAV_TRIAL_COLUMNS, [t.row() for t in self.trials])


def navigation_benchmark(scenarios: Sequence[Scenario], config, trials: int | None = None,
                         noisy_localization: float | None = None,
                         controller_factory: Callable[[Scene], object] | None = None,
                         planner_factory=None, terrain_factory: Callable[[Scene, object], object] | None = None,
                         on_trial: Callable[[NavTrial], None] | None = None) -> NavigationReport:
    '''
    Run every scenario for ``trials`` seeds, with and without localization noise

    Trial ``k`` of a scenario uses the same scene seed in both runs.  A
    noise level of 0 skips the noisy runs.
    '''
    trials = config.eval.trials if trials is None else trials
    noisy = config.eval.noisy_localization if noisy_localization is None else noisy_localization
    report = NavigationReport()
    for scenario in scenarios:
        base_noise = config.nav.localization_noise if scenario.localization_noise is None \
            else scenario.localization_noise
        levels = [base_noise] + ([noisy] if noisy > 0 and noisy != base_noise else [])
        for trial in range(trials):
            seed = config.streams.seed('nav', scenario.seed, trial)
            for noisy_run, noise in enumerate(levels):
                outcome = run_trial(scenario, trial, seed, config, noise, bool(noisy_run), controller_factory,
                                    planner_factory, terrain_factory)
                report.trials.append(outcome)
                if on_trial is not None:
                    on_trial(outcome)
        logger.info("scenario %s finished", scenario.name)
    return report
