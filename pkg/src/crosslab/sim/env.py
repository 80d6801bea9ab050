from __future__ import annotations

import logging
import math

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from crosslab import defaults
from crosslab.evaluation.records import EpisodeRecord
from crosslab.exceptions import SimulationFault
from crosslab.sim import robot
from crosslab.sim.events import sample_command, schedule_events
from crosslab.sim.kinematics import NOMINAL_JOINTS
from crosslab.sim.observation import NoiseScales, observe
from crosslab.sim.randomization import randomize_dynamics
from crosslab.sim.reward import RewardBreakdown, compute_reward
from crosslab.sim.termination import Status, check_termination, termination_options
from crosslab.sim.trajectory import TrajectoryLog
from crosslab.terrain.curriculum import TerrainCurriculum
from crosslab.terrain.tiles import Category
from crosslab.terrain.world import HeightFieldWorld
from crosslab.utils.capacity import resolve_threads

logger = logging.getLogger(__name__)

ZERO_REWARD = RewardBreakdown(*([0.0] * 10))


@dataclass(frozen=True)
class Observation:
    proprio: np.ndarray
    privileged: np.ndarray
    terrain: np.ndarray

    @property
    def critic(self) -> np.ndarray:
        return np.concatenate([self.proprio, self.privileged, self.terrain], axis=-1)


@dataclass
class StepResult:
    observation: Observation
    reward: RewardBreakdown
    status: Status


class LeggedEnv:
    '''
    One simulated robot on the shared terrain world

    Owns its random streams (dynamics, noise, commands) keyed by ``env_id``
    so that environments never share mutable state.  ``step`` does not
    reset; the caller decides what happens after a terminal status.
    '''

    def __init__(self, world: HeightFieldWorld, config, env_id: int = 0,
                 trajectory_log: TrajectoryLog | None = None, noise: bool | None = None):
        self.world = world
        self.config = config
        self.env_config = config.env
        self.env_id = env_id
        self.trajectory_log = trajectory_log
        self.noise = self.env_config.noise if noise is None else noise
        self.scales = NoiseScales.from_config(self.env_config)
        self.termination = termination_options(self.env_config)
        streams = config.streams
        self.noise_rng = streams.rng('noise', env_id)
        self.command_rng = streams.rng('commands', env_id)
        self.push_rng = streams.rng('pushes', env_id)
        self.episode = -1
        self.state: robot.RobotState | None = None
        self.params: robot.DynamicsParams | None = None
        self.command = np.zeros(3)
        self.last_action = NOMINAL_JOINTS.copy()
        self.history: deque = deque()
        self.record: EpisodeRecord | None = None
        self.tile: tuple[Category, int] = (Category.FLAT, 0)
        self.spawn = (0.0, 0.0)
        self.commanded_distance = 0.0
        self.last_observation: Observation | None = None

    @property
    def episode_seed(self) -> int:
        return self.config.streams.seed('dynamics', self.env_id, self.episode)

    def reset(self, tile: tuple[Category | str, int] | None = None) -> Observation:
        if tile is not None:
            self.tile = (Category.parse(tile[0]), int(tile[1]))
        self.episode += 1
        seed = self.episode_seed
        self.params = randomize_dynamics(self.env_config, seed)
        self.state = robot.reset(self.world, self.tile, self.params, seed,
                                 start_zone=self.config.terrain.start_zone)
        self.command = sample_command(self.command_rng, self.env_config)
        self.last_action = self.state.joint_pos.copy()
        self.history = deque([(0.0, self.state.position[0], self.state.position[1])])
        self.spawn = (float(self.state.position[0]), float(self.state.position[1]))
        self.commanded_distance = 0.0
        self.record = EpisodeRecord(env_id=self.env_id, category=self.tile[0].value,
                                    level=self.tile[1], seed=seed)
        self.last_observation = self._observe()
        return self.last_observation

    def _observe(self) -> Observation:
        proprio, privileged, terrain = observe(
            self.state, self.command, self.last_action, self.noise, self.noise_rng,
            world=self.world, params=self.params, scales=self.scales)
        return Observation(proprio.vector(), privileged.vector(), terrain.values)

    @property
    def distance(self) -> float:
        return math.hypot(self.state.position[0] - self.spawn[0], self.state.position[1] - self.spawn[1])

    def step(self, action) -> StepResult:
        '''
        Apply one joint-position target and advance one control step

        :raises: SimulationFault tagged with this environment's id.
        '''
        prev = self.state
        try:
            state = robot.step(prev, action, self.params, self.world)
        except SimulationFault as exc:
            raise SimulationFault(str(exc), env_id=self.env_id) from exc
        reward = compute_reward(prev, state, self.command, action)
        self.record.record_step(self.command, (*state.body_lin_vel[:2], state.ang_vel[2]))
        self.commanded_distance += float(np.linalg.norm(self.command[:2])) * defaults.CONTROL_DT
        self.last_action = robot.clip_action(action)
        t = state.t
        self.history.append((t, state.position[0], state.position[1]))
        window = self.termination['stuck_window'] + 2 * defaults.CONTROL_DT
        while len(self.history) > 2 and self.history[1][0] <= t - window:
            self.history.popleft()
        _, _, yaw = state.euler
        heading = yaw + math.atan2(self.command[1], self.command[0])
        status = check_termination(state, self.history, t, world=self.world, heading=heading,
                                   **self.termination)
        self.state = state
        if not status.done:
            for event in schedule_events(t, self.command_rng, self.env_config, self.push_rng):
                if event.kind == 'command':
                    self.command = np.array(event.payload)
                elif event.kind == 'push':
                    self.state = robot.apply_push(self.state, event.payload)
        else:
            self.record.finish(status.value, t, self.distance)
        if self.trajectory_log is not None:
            self.trajectory_log.record(self.env_id, state, self.command, action, reward, status)
        self.last_observation = self._observe()
        return StepResult(self.last_observation, reward, status)


@dataclass
class VecStep:
    '''
    One control step across all environments

    ``terminal`` holds the observation reached by each environment that
    finished this step (``None`` otherwise); the arrays already show the
    first observation of the next episode for those environments.
    '''
    proprio: np.ndarray
    privileged: np.ndarray
    terrain: np.ndarray
    rewards: np.ndarray
    breakdowns: list
    statuses: list
    terminal: list
    finished: list

    @property
    def dones(self) -> np.ndarray:
        return np.array([s.done for s in self.statuses])


def _stack(observations) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (np.stack([o.proprio for o in observations]),
            np.stack([o.privileged for o in observations]),
            np.stack([o.terrain for o in observations]))


class VecEnv:
    '''
    A batch of independent environments stepped together

    Environments finishing an episode are reset in env order on the calling
    thread, after the curriculum has seen their outcome.  With one thread
    (or ``reference_mode``) stepping is serial and bit-reproducible.
    '''

    def __init__(self, world: HeightFieldWorld, config, num_envs: int | None = None,
                 trajectory_log: TrajectoryLog | None = None, noise: bool | None = None,
                 curriculum: TerrainCurriculum | None = None):
        self.world = world
        self.config = config
        self.num_envs = num_envs or config.env.num_envs
        terrain = config.terrain
        self.curriculum = curriculum or TerrainCurriculum(
            self.num_envs, terrain.categories, config.streams.rng('terrain', 1),
            init_level=terrain.init_level, max_level=terrain.max_level, enabled=terrain.curriculum)
        self.envs = [LeggedEnv(world, config, i, trajectory_log=trajectory_log, noise=noise)
                     for i in range(self.num_envs)]
        threads = 1 if config.reference_mode else resolve_threads(config.threads)
        self._pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
        self.faults = 0

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    @property
    def episode_ids(self) -> np.ndarray:
        return np.array([env.episode for env in self.envs])

    @property
    def episode_seeds(self) -> np.ndarray:
        return np.array([env.episode_seed for env in self.envs], dtype=np.int64)

    def reset(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        observations = [env.reset(self.curriculum.assignment(env.env_id)) for env in self.envs]
        return _stack(observations)

    def _step_one(self, env: LeggedEnv, action) -> StepResult:
        try:
            return env.step(action)
        except SimulationFault as exc:
            logger.warning("environment %s faulted, resampling: %s", exc.env_id, exc)
            env.record.finish(Status.FAULT.value, env.state.t, env.distance)
            return StepResult(env.last_observation, ZERO_REWARD, Status.FAULT)

    def step(self, actions) -> VecStep:
        actions = np.asarray(actions, dtype=np.float64)
        if self._pool is None:
            results = [self._step_one(env, a) for env, a in zip(self.envs, actions)]
        else:
            results = list(self._pool.map(self._step_one, self.envs, actions))
        observations, terminal, finished = [], [], []
        for env, result in zip(self.envs, results):
            if result.status.done:
                if result.status is Status.FAULT:
                    self.faults += 1
                terminal.append(result.observation)
                finished.append(env.record)
                tile = self.curriculum.update(env.env_id, env.distance, env.commanded_distance)
                observations.append(env.reset(tile))
            else:
                terminal.append(None)
                observations.append(result.observation)
        proprio, privileged, terrain = _stack(observations)
        return VecStep(
            proprio=proprio,
            privileged=privileged,
            terrain=terrain,
            rewards=np.array([r.reward.total for r in results]),
            breakdowns=[r.reward for r in results],
            statuses=[r.status for r in results],
            terminal=terminal,
            finished=finished,
        )
