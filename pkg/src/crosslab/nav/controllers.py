from __future__ import annotations

import math

from collections.abc import Sequence

import numpy as np

from crosslab import defaults
from crosslab.nav.types import VelocityCommand, wrap_angle
from crosslab.pas.inference import PolicyRunner
from crosslab.pas.policies import estimate
from crosslab.pas.terrain_estimator import classify_terrain, terrain_label
from crosslab.sim import robot
from crosslab.sim.kinematics import NOMINAL_JOINTS
from crosslab.sim.observation import observe
from crosslab.terrain.world import HeightFieldWorld, Pose, scan_heights


class Localizer:
    '''
    Pose estimate handed to the skills: ground truth plus optional drift

    The drift is a planar Gaussian random walk with ``noise`` metres per
    square-root second, emulating visual-inertial odometry error.
    '''

    def __init__(self, noise: float = 0.0, rng: np.random.Generator | None = None,
                 dt: float = defaults.CONTROL_DT):
        if noise < 0:
            raise ValueError(f"localization noise must be non-negative, got {noise}")
        if noise > 0 and rng is None:
            raise ValueError("a random generator is required for localization noise")
        self.noise = noise
        self.rng = rng
        self.dt = dt
        self.drift = np.zeros(2)

    def reset(self) -> None:
        self.drift = np.zeros(2)

    def observe(self, pose: Pose) -> Pose:
        if self.noise == 0:
            return pose
        self.drift = self.drift + self.rng.normal(0.0, self.noise * math.sqrt(self.dt), 2)
        return Pose(pose.x + self.drift[0], pose.y + self.drift[1], pose.z, pose.yaw)


class KinematicController:
    '''
    Fast terrain-following stand-in for the locomotion policy

    Integrates the body-frame command directly.  A move whose ground rises
    more than ``max_step_height`` is refused; heading changes still apply.
    '''

    fallen = False

    def __init__(self, world: HeightFieldWorld, max_step_height: float = 0.25, dt: float = defaults.CONTROL_DT):
        self.world = world
        self.max_step_height = max_step_height
        self.dt = dt
        self.blocked_steps = 0
        self.pose = Pose(0.0, 0.0, 0.0, 0.0)
        self.last_command = VelocityCommand()

    def reset(self, pose: Pose) -> Pose:
        self.pose = Pose(pose.x, pose.y, self.world.height_at(pose.x, pose.y), pose.yaw)
        self.blocked_steps = 0
        self.last_command = VelocityCommand()
        return self.pose

    def apply(self, command: VelocityCommand) -> Pose:
        # at most one outstanding command: the latest replaces the previous one
        self.last_command = command
        x, y, z, yaw = self.pose
        c, s = math.cos(yaw), math.sin(yaw)
        nx = x + (c * command.vx - s * command.vy) * self.dt
        ny = y + (s * command.vx + c * command.vy) * self.dt
        nyaw = wrap_angle(yaw + command.wz * self.dt)
        ground = self.world.height_at(nx, ny)
        if ground - z > self.max_step_height:
            self.blocked_steps += 1
            nx, ny, ground = x, y, z
        self.pose = Pose(nx, ny, ground, nyaw)
        return self.pose


class PolicyController:
    '''
    Drives a locomotion policy in the simulator with the velocity commands

    Uses nominal dynamics and noise-free observations.  The robot counts as
    fallen once roll or pitch pass the episode termination thresholds.
    '''

    def __init__(self, world: HeightFieldWorld, policy, env_config=None):
        self.world = world
        self.policy = policy
        self.runner = PolicyRunner(policy, 1)
        if env_config is None:
            self.params = robot.DynamicsParams()
            self.fall_roll, self.fall_pitch = 0.8, 1.0
        else:
            self.params = robot.DynamicsParams(kp=env_config.kp, kd=env_config.kd, gravity=env_config.gravity,
                                                contact_stiffness=env_config.contact_stiffness,
                                                contact_damping=env_config.contact_damping)
            self.fall_roll, self.fall_pitch = env_config.fall_roll, env_config.fall_pitch
        self.state = None
        self.fallen = False
        self.proprio: np.ndarray | None = None
        self.last_command = VelocityCommand()

    @property
    def pose(self) -> Pose:
        x, y, _ = self.state.position
        _, _, yaw = self.state.euler
        return Pose(float(x), float(y), self.world.height_at(x, y), float(yaw))

    def reset(self, pose: Pose) -> Pose:
        self.state = robot.place_robot(self.world, pose.x, pose.y, pose.yaw, NOMINAL_JOINTS, self.params)
        self.last_action = NOMINAL_JOINTS.copy()
        self.starts = np.ones(1, dtype=bool)
        self.runner.reset(1)
        self.fallen = False
        self.proprio = None
        return self.pose

    def apply(self, command: VelocityCommand) -> Pose:
        self.last_command = command
        proprio, privileged, terrain = observe(self.state, np.array(command, dtype=np.float64), self.last_action,
                                               False, None, world=self.world, params=self.params)
        self.proprio = proprio.vector()
        obs = {'proprio': self.proprio[None], 'privileged': privileged.vector()[None],
               'terrain': terrain.values[None]}
        targets = self.runner.act(obs, self.starts)[0]
        self.starts = np.zeros(1, dtype=bool)
        self.state = robot.step(self.state, targets, self.params, self.world)
        self.last_action = robot.clip_action(targets)
        roll, pitch, _ = self.state.euler
        if abs(roll) > self.fall_roll or abs(pitch) > self.fall_pitch:
            self.fallen = True
        return self.pose


class GroundTruthTerrainStream:
    '''
    Terrain-versus-plane label from the exact height scan under the robot
    '''

    def __init__(self, world: HeightFieldWorld, threshold: float = 0.05):
        self.world = world
        self.threshold = threshold

    def reset(self) -> None:
        pass

    def __call__(self, pose: Pose, controller=None) -> bool:
        scan = scan_heights(self.world, pose.x, pose.y, pose.z, pose.yaw)
        return bool(terrain_label(scan, self.threshold) > 0.5)


class ScriptedTerrainStream:
    '''
    Replays a fixed label sequence, then defers to ``fallback``

    Without a fallback the last scripted label repeats.
    '''

    def __init__(self, labels: Sequence, fallback=None):
        self.labels = list(labels)
        self.fallback = fallback
        self.reset()

    def reset(self) -> None:
        self.position = 0
        if self.fallback is not None:
            self.fallback.reset()

    def __call__(self, pose: Pose, controller=None):
        if self.position < len(self.labels):
            label = self.labels[self.position]
            self.position += 1
            return label
        if self.fallback is not None:
            return self.fallback(pose, controller)
        return self.labels[-1] if self.labels else False


class ClassifierTerrainStream:
    '''
    Labels from a trained terrain classifier fed by a deploy policy's estimator

    Reads the proprioception of a :class:`PolicyController` and keeps its
    own estimator memory.
    '''

    def __init__(self, network, policy):
        self.network = network
        self.policy = policy
        self.reset()

    def reset(self) -> None:
        self.state = self.policy.initial_state(1)
        self.started = False

    def __call__(self, pose: Pose, controller=None) -> bool:
        if controller is None or controller.proprio is None:
            return False
        proprio = controller.proprio[None, None]
        masks = np.full((1, 1), 1.0 if self.started else 0.0)
        latent, self.state = estimate(self.policy.networks, self.policy.params, proprio, self.state, masks)
        self.started = True
        features = np.concatenate([proprio[0], latent[0]], axis=-1)
        return bool(classify_terrain(self.network, features)[0] > 0.5)
