from __future__ import annotations

import math

from dataclasses import asdict, dataclass

import numpy as np

from crosslab import defaults
from crosslab.sim.robot import RobotState

TERM_WEIGHTS = {
    'lin_vel': 3.0,
    'ang_vel': 1.0,
    'alive': 1.0,
    'energy': 1e-6,
    'joint_vel': 0.002,
    'joint_acc': 2e-6,
    'ang_stability': 0.2,
    'feet_air': 0.05,
    'balance': 2e-5,
}
TRACKING_SIGMA = 0.25
AIR_TIME_TARGET = 0.3
AIR_TIME_FLOOR = 0.5


@dataclass(frozen=True)
class RewardBreakdown:
    '''
    Weighted reward terms of one control step

    Every field already carries its weight, so ``total`` is their plain sum.
    '''
    lin_vel: float
    ang_vel: float
    alive: float
    energy: float
    joint_vel: float
    joint_acc: float
    ang_stability: float
    feet_air: float
    balance: float
    total: float

    @property
    def task(self) -> float:
        return self.lin_vel + self.ang_vel

    @property
    def performance(self) -> float:
        return self.energy + self.joint_vel + self.joint_acc + self.ang_stability

    @property
    def style(self) -> float:
        return self.feet_air + self.balance

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def raw_terms(prev_state: RobotState, state: RobotState, command, energy: float | None = None) -> dict[str, float]:
    '''
    Unweighted reward terms; ``energy`` overrides the per-step sum in ``state``
    '''
    command = np.asarray(command, dtype=np.float64)
    body_vel = state.body_lin_vel
    omega = state.ang_vel
    joint_acc = (state.joint_vel - prev_state.joint_vel) / defaults.CONTROL_DT
    forces = state.foot_forces
    air = state.last_air_time
    feet_air = float(np.sum(np.where(
        state.touchdown,
        (air - AIR_TIME_TARGET) + 10.0 * np.maximum(AIR_TIME_FLOOR - air, 0.0),
        0.0)))
    return {
        'lin_vel': math.exp(-float(np.linalg.norm(command[:2] - body_vel[:2])) / TRACKING_SIGMA),
        'ang_vel': math.exp(-abs(float(command[2] - omega[2])) / TRACKING_SIGMA),
        'alive': 1.0,
        'energy': -(state.energy if energy is None else energy),
        'joint_vel': -float(np.linalg.norm(state.joint_vel)),
        'joint_acc': -float(np.linalg.norm(joint_acc)),
        'ang_stability': -(abs(float(omega[0])) + abs(float(omega[1]))),
        'feet_air': feet_air,
        'balance': -abs(float(forces[0] + forces[2] - forces[1] - forces[3])),
    }


def compute_reward(prev_state: RobotState, state: RobotState, command, action=None) -> RewardBreakdown:
    '''
    Score one control step

    Tracking terms decay exponentially with the command error; the energy
    term sums joint speed times torque over the physics substeps of the
    step; the air-time term only scores feet that touched down this step.

    :param prev_state: state before the step.
    :param state: state after the step.
    :param command: ``(vx, vy, wz)`` in the base frame.
    :param action: joint target of the step; accepted for interface symmetry.
    '''
    weighted = {name: TERM_WEIGHTS[name] * value for name, value in raw_terms(prev_state, state, command).items()}
    return RewardBreakdown(total=float(sum(weighted.values())), **weighted)


def replay_energy(substep_log) -> float:
    '''
    Energy of a step recomputed from its logged substep joint velocities and torques
    '''
    total = 0.0
    for joint_vel, torque in substep_log:
        total += math.sqrt(sum(v * v for v in joint_vel)) * math.sqrt(sum(t * t for t in torque))
    return total
