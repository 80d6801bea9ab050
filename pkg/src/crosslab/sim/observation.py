from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from crosslab import defaults
from crosslab.sim.robot import DynamicsParams, RobotState
from crosslab.terrain.world import HeightFieldWorld, TerrainSample, scan_heights


@dataclass(frozen=True)
class NoiseScales:
    lin_vel: float = 0.05
    ang_vel: float = 0.2
    gravity: float = 0.05
    joint_pos: float = 0.01
    joint_vel: float = 1.5

    @classmethod
    def from_config(cls, env_config) -> NoiseScales:
        return cls(
            lin_vel=env_config.noise_lin_vel,
            ang_vel=env_config.noise_ang_vel,
            gravity=env_config.noise_gravity,
            joint_pos=env_config.noise_joint_pos,
            joint_vel=env_config.noise_joint_vel,
        )


@dataclass(frozen=True)
class Proprioception:
    '''
    What the robot senses about itself, 45 values

    Order: projected gravity, base angular velocity, command, joint
    positions, joint velocities, last action.
    '''
    gravity: np.ndarray
    ang_vel: np.ndarray
    command: np.ndarray
    joint_pos: np.ndarray
    joint_vel: np.ndarray
    last_action: np.ndarray

    def vector(self) -> np.ndarray:
        out = np.concatenate([self.gravity, self.ang_vel, self.command,
                              self.joint_pos, self.joint_vel, self.last_action])
        assert out.shape == (defaults.PROPRIO_DIM,)
        return out


@dataclass(frozen=True)
class PrivilegedState:
    lin_vel: np.ndarray
    friction: float

    def vector(self) -> np.ndarray:
        return np.concatenate([self.lin_vel, [self.friction]])


def observe(state: RobotState, command, last_action, noise_on: bool, rng: np.random.Generator | None,
            world: HeightFieldWorld | None = None, params: DynamicsParams | None = None,
            scales: NoiseScales = NoiseScales()) -> tuple[Proprioception, PrivilegedState, TerrainSample]:
    '''
    Assemble the three observation groups from a robot state

    With ``noise_on`` zero-mean Gaussian noise is added to every sensed
    quantity except the command and last action; the terrain scan and the
    friction coefficient are exact.  Without a world the terrain scan is
    all zeros.
    '''
    gravity = state.projected_gravity
    ang_vel = np.array(state.ang_vel)
    joint_pos = np.array(state.joint_pos)
    joint_vel = np.array(state.joint_vel)
    lin_vel = state.body_lin_vel
    if noise_on:
        if rng is None:
            raise ValueError("a random generator is required when noise is on")
        gravity = gravity + rng.normal(0.0, scales.gravity, 3)
        ang_vel = ang_vel + rng.normal(0.0, scales.ang_vel, 3)
        joint_pos = joint_pos + rng.normal(0.0, scales.joint_pos, defaults.ACTION_DIM)
        joint_vel = joint_vel + rng.normal(0.0, scales.joint_vel, defaults.ACTION_DIM)
        lin_vel = lin_vel + rng.normal(0.0, scales.lin_vel, 3)
    proprio = Proprioception(
        gravity=gravity,
        ang_vel=ang_vel,
        command=np.asarray(command, dtype=np.float64).copy(),
        joint_pos=joint_pos,
        joint_vel=joint_vel,
        last_action=np.asarray(last_action, dtype=np.float64).copy(),
    )
    friction = params.friction if params is not None else 1.0
    privileged = PrivilegedState(lin_vel=lin_vel, friction=float(friction))
    if world is None:
        terrain = TerrainSample(np.zeros(defaults.TERRAIN_DIM))
    else:
        _, _, yaw = state.euler
        x, y, z = state.position
        terrain = TerrainSample(scan_heights(world, x, y, z, yaw))
    return proprio, privileged, terrain
