from __future__ import annotations

import logging

from dataclasses import dataclass, field, replace

import numpy as np

from crosslab import defaults
from crosslab.exceptions import InvalidInputError, SimulationFault
from crosslab.sim.kinematics import (
    JOINT_LOWER,
    JOINT_UPPER,
    NOMINAL_JOINTS,
    integrate_quat,
    leg_jacobians,
    leg_positions,
    quat_from_euler,
    quat_to_euler,
    quat_to_matrix,
)
from crosslab.terrain.tiles import Category
from crosslab.terrain.world import HeightFieldWorld
from crosslab.utils.seeding import rng_from_seed

logger = logging.getLogger(__name__)

BASE_MASS = 12.0
BASE_INERTIA = np.array([0.1, 0.25, 0.3])
JOINT_INERTIA = 0.01
TANGENTIAL_DAMPING = 400.0


@dataclass
class DynamicsParams:
    '''
    Per-episode physical parameters of the robot and its contact model
    '''
    added_mass: float = 0.0
    com_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    friction: float = 1.0
    motor_strength: float = 1.0
    kp: float = 40.0
    kd: float = 0.5
    init_joint_scale: tuple[float, float] = (0.5, 1.5)
    init_base_vel: tuple[float, float] = (-1.0, 1.0)
    gravity: float = 9.81
    contact_stiffness: float = 5000.0
    contact_damping: float = 120.0

    @property
    def mass(self) -> float:
        return BASE_MASS + self.added_mass

    @property
    def inertia(self) -> np.ndarray:
        return BASE_INERTIA * (self.mass / BASE_MASS)

    def to_dict(self) -> dict:
        return {
            'added_mass': float(self.added_mass),
            'com_offset': [float(v) for v in self.com_offset],
            'friction': float(self.friction),
            'motor_strength': float(self.motor_strength),
            'kp': float(self.kp),
            'kd': float(self.kd),
        }


@dataclass
class RobotState:
    '''
    Full simulator state after one control step

    Velocities of the base are kept in the world frame for linear motion and
    the body frame for angular motion. ``substep_log`` keeps the joint
    velocity and motor torque of every physics substep of the last control
    step, which is what the energy term is summed over.
    '''
    position: np.ndarray
    orientation: np.ndarray
    lin_vel: np.ndarray
    ang_vel: np.ndarray
    joint_pos: np.ndarray
    joint_vel: np.ndarray
    joint_acc: np.ndarray = field(default_factory=lambda: np.zeros(defaults.ACTION_DIM))
    torque: np.ndarray = field(default_factory=lambda: np.zeros(defaults.ACTION_DIM))
    foot_forces: np.ndarray = field(default_factory=lambda: np.zeros(defaults.NUM_FEET))
    air_time: np.ndarray = field(default_factory=lambda: np.zeros(defaults.NUM_FEET))
    last_air_time: np.ndarray = field(default_factory=lambda: np.zeros(defaults.NUM_FEET))
    touchdown: np.ndarray = field(default_factory=lambda: np.zeros(defaults.NUM_FEET, dtype=bool))
    t: float = 0.0
    energy: float = 0.0
    substep_log: tuple = ()
    foot_world: np.ndarray | None = None

    def copy(self) -> RobotState:
        return replace(
            self,
            **{name: np.array(getattr(self, name)) for name in (
                'position', 'orientation', 'lin_vel', 'ang_vel', 'joint_pos', 'joint_vel',
                'joint_acc', 'torque', 'foot_forces', 'air_time', 'last_air_time', 'touchdown')},
            foot_world=None if self.foot_world is None else np.array(self.foot_world),
        )

    @property
    def rotation(self) -> np.ndarray:
        return quat_to_matrix(self.orientation)

    @property
    def euler(self) -> tuple[float, float, float]:
        return quat_to_euler(self.orientation)

    @property
    def body_lin_vel(self) -> np.ndarray:
        return self.rotation.T @ self.lin_vel

    @property
    def projected_gravity(self) -> np.ndarray:
        return self.rotation.T @ np.array([0.0, 0.0, -1.0])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(getattr(self, name))) for name in (
            'position', 'orientation', 'lin_vel', 'ang_vel', 'joint_pos', 'joint_vel'))


def feet_in_world(state: RobotState, params: DynamicsParams) -> np.ndarray:
    body = leg_positions(state.joint_pos) - params.com_offset
    return state.position + body @ state.rotation.T


def clip_action(action) -> np.ndarray:
    '''
    Clip a joint-position target to the joint limits

    :raises: InvalidInputError for a wrongly shaped or non-finite action.
    '''
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (defaults.ACTION_DIM,):
        raise InvalidInputError(f"action must have {defaults.ACTION_DIM} entries, got shape {action.shape}")
    if not np.all(np.isfinite(action)):
        raise InvalidInputError("action contains non-finite values")
    return np.clip(action, JOINT_LOWER, JOINT_UPPER)


def reset(world: HeightFieldWorld, tile: tuple[Category | str | int, int], params: DynamicsParams,
          seed: int, start_zone: float = defaults.START_ZONE, yaw: float = 0.0) -> RobotState:
    '''
    Spawn the robot in the start zone of a tile

    Joints start at the nominal pose scaled per joint by a draw from
    ``params.init_joint_scale`` and the base velocity is drawn per axis from
    ``params.init_base_vel``.  The base is lowered until its lowest foot
    touches the terrain.

    :param tile: ``(category, level)`` of the tile to spawn on.
    '''
    category, level = tile
    rng = rng_from_seed(seed)
    lo, hi = params.init_joint_scale
    joint_pos = np.clip(NOMINAL_JOINTS * rng.uniform(lo, hi, defaults.ACTION_DIM), JOINT_LOWER, JOINT_UPPER)
    vlo, vhi = params.init_base_vel
    lin_vel = rng.uniform(vlo, vhi, 3)
    x, y = world.spawn_point(category, level, start_zone)
    return place_robot(world, x, y, yaw, joint_pos, params, lin_vel=lin_vel)


def place_robot(world: HeightFieldWorld, x: float, y: float, yaw: float, joint_pos, params: DynamicsParams,
                lin_vel=None, t: float = 0.0) -> RobotState:
    '''
    Build a resting state with the lowest foot exactly on the terrain
    '''
    quat = quat_from_euler(0.0, 0.0, yaw)
    state = RobotState(
        position=np.array([x, y, 0.0]),
        orientation=quat,
        lin_vel=np.zeros(3) if lin_vel is None else np.asarray(lin_vel, dtype=np.float64),
        ang_vel=np.zeros(3),
        joint_pos=np.array(joint_pos, dtype=np.float64),
        joint_vel=np.zeros(defaults.ACTION_DIM),
        t=t,
    )
    feet = feet_in_world(state, params)
    ground = world.heights_at(feet[:, 0], feet[:, 1])
    state.position[2] = float(np.max(ground - feet[:, 2]))
    state.foot_world = feet_in_world(state, params)
    return state


def motor_torque(action: np.ndarray, joint_pos: np.ndarray, joint_vel: np.ndarray,
                 params: DynamicsParams) -> np.ndarray:
    return params.motor_strength * (params.kp * (action - joint_pos) - params.kd * joint_vel)


def _contact_forces(feet: np.ndarray, foot_vel: np.ndarray, world: HeightFieldWorld,
                    params: DynamicsParams) -> np.ndarray:
    ground = world.heights_at(feet[:, 0], feet[:, 1])
    depth = ground - feet[:, 2]
    normal = np.where(depth > 0.0,
                      params.contact_stiffness * depth - params.contact_damping * foot_vel[:, 2], 0.0)
    normal = np.maximum(normal, 0.0)
    tangential = -TANGENTIAL_DAMPING * foot_vel[:, :2] * (normal > 0.0)[:, None]
    magnitude = np.linalg.norm(tangential, axis=1)
    cap = params.friction * normal
    scale = np.where(magnitude > cap, cap / np.maximum(magnitude, 1e-12), 1.0)
    tangential = tangential * scale[:, None]
    return np.concatenate([tangential, normal[:, None]], axis=1)


def _substep(state: RobotState, action: np.ndarray, params: DynamicsParams, world: HeightFieldWorld,
             dt: float, prev_feet: np.ndarray):
    rot = state.rotation
    feet = feet_in_world(state, params)
    foot_vel = (feet - prev_feet) / dt
    forces = _contact_forces(feet, foot_vel, world, params)

    tau = motor_torque(action, state.joint_pos, state.joint_vel, params)
    forces_body = forces @ rot
    jac = leg_jacobians(state.joint_pos)
    load = np.einsum('lij,li->lj', jac, forces_body).reshape(-1)
    joint_vel = state.joint_vel + dt * (tau + load) / JOINT_INERTIA
    joint_pos = state.joint_pos + dt * joint_vel
    limited = (joint_pos < JOINT_LOWER) | (joint_pos > JOINT_UPPER)
    joint_pos = np.clip(joint_pos, JOINT_LOWER, JOINT_UPPER)
    joint_vel = np.where(limited, 0.0, joint_vel)

    total = forces.sum(axis=0) + np.array([0.0, 0.0, -params.mass * params.gravity])
    lever = feet - state.position
    torque_body = rot.T @ np.cross(lever, forces).sum(axis=0)
    inertia = params.inertia
    omega = state.ang_vel
    ang_acc = (torque_body - np.cross(omega, inertia * omega)) / inertia

    state.lin_vel = state.lin_vel + dt * total / params.mass
    state.position = state.position + dt * state.lin_vel
    state.ang_vel = omega + dt * ang_acc
    state.orientation = integrate_quat(state.orientation, state.ang_vel, dt)
    state.joint_pos = joint_pos
    state.joint_vel = joint_vel
    state.torque = tau
    return feet, forces[:, 2]


def step(state: RobotState, action, params: DynamicsParams, world: HeightFieldWorld,
         control_dt: float = defaults.CONTROL_DT, substeps: int = defaults.SUBSTEPS) -> RobotState:
    '''
    Advance the robot one control step under a joint-position target

    The PD law runs at every physics substep against the penalty contact
    model; joint acceleration, foot forces and air time are updated once per
    control step.

    :raises: SimulationFault when the state turns non-finite.
    '''
    action = clip_action(action)
    dt = control_dt / substeps
    nxt = state.copy()
    prev_feet = state.foot_world if state.foot_world is not None else feet_in_world(state, params)
    energy = 0.0
    log = []
    in_contact = np.zeros(defaults.NUM_FEET, dtype=bool)
    normal = np.zeros(defaults.NUM_FEET)
    with np.errstate(all='ignore'):
        for _ in range(substeps):
            prev_feet, normal = _substep(nxt, action, params, world, dt, prev_feet)
            in_contact |= normal > 0.0
            energy += float(np.linalg.norm(nxt.joint_vel) * np.linalg.norm(nxt.torque))
            log.append((nxt.joint_vel.copy(), nxt.torque.copy()))
    if not nxt.is_finite() or not np.isfinite(energy):
        raise SimulationFault(f"non-finite robot state at t={state.t + control_dt:.3f}s")
    nxt.foot_world = prev_feet
    nxt.foot_forces = normal
    nxt.joint_acc = (nxt.joint_vel - state.joint_vel) / control_dt
    nxt.energy = energy
    nxt.substep_log = tuple(log)
    nxt.t = state.t + control_dt

    was_airborne = state.air_time > 0.0
    nxt.touchdown = in_contact & was_airborne
    nxt.last_air_time = np.where(nxt.touchdown, state.air_time, state.last_air_time)
    nxt.air_time = np.where(in_contact, 0.0, state.air_time + control_dt)
    return nxt


def apply_push(state: RobotState, velocity_delta) -> RobotState:
    pushed = state.copy()
    pushed.lin_vel = pushed.lin_vel + np.asarray(velocity_delta, dtype=np.float64)
    return pushed
