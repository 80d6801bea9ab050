from __future__ import annotations

import math

from collections.abc import Iterable
from dataclasses import dataclass

from crosslab import defaults
from crosslab.nav.camera import to_body
from crosslab.nav.types import SubGoal, VelocityCommand, wrap_angle
from crosslab.terrain.world import Pose

DONE_DISTANCE = 0.1


@dataclass(frozen=True)
class NavGains:
    kp_lin: float = 1.0
    kd_lin: float = 0.1
    kp_yaw: float = 2.0
    max_vx: float = 1.0
    max_vy: float = 0.5
    max_wz: float = 1.0
    done_radius: float = 0.1
    yaw_tolerance: float = 0.1

    @classmethod
    def from_config(cls, nav_config) -> NavGains:
        return cls(nav_config.kp_lin, nav_config.kd_lin, nav_config.kp_yaw, nav_config.max_vx,
                   nav_config.max_vy, nav_config.max_wz, nav_config.done_radius, nav_config.yaw_tolerance)


def _clip(value: float, limit: float) -> float:
    return min(max(value, -limit), limit)


def position_error(pose: Pose, subgoal: SubGoal) -> tuple[float, float]:
    return to_body(pose, subgoal.x, subgoal.y)


def velocity_command(pose: Pose, subgoal: SubGoal, gains: NavGains = NavGains(),
                     previous_error: tuple[float, float] | None = None,
                     dt: float = defaults.CONTROL_DT) -> VelocityCommand:
    '''
    PD velocity command toward a sub-goal, in the body frame

    Linear velocity is proportional to the body-frame position error plus
    a derivative term on its change since ``previous_error``.  The yaw rate
    steers toward the sub-goal heading, or toward the sub-goal itself when
    it has none.  The command is zero inside the done radius; aligning to
    the sub-goal heading there is :func:`heading_command`.  Every component
    is clipped to its limit.
    '''
    ex, ey = position_error(pose, subgoal)
    if math.hypot(ex, ey) < gains.done_radius:
        return VelocityCommand()
    dx, dy = (0.0, 0.0) if previous_error is None else (ex - previous_error[0], ey - previous_error[1])
    vx = gains.kp_lin * ex + gains.kd_lin * dx / dt
    vy = gains.kp_lin * ey + gains.kd_lin * dy / dt
    target = subgoal.yaw if subgoal.yaw is not None else pose.yaw + math.atan2(ey, ex)
    wz = gains.kp_yaw * wrap_angle(target - pose.yaw)
    return VelocityCommand(_clip(vx, gains.max_vx), _clip(vy, gains.max_vy), _clip(wz, gains.max_wz))


def heading_command(pose: Pose, subgoal: SubGoal, gains: NavGains = NavGains()) -> VelocityCommand:
    '''
    Turn in place toward the sub-goal heading; zero once within tolerance or
    when the sub-goal has no heading
    '''
    if subgoal.yaw is None:
        return VelocityCommand()
    yaw_error = wrap_angle(subgoal.yaw - pose.yaw)
    if abs(yaw_error) < gains.yaw_tolerance:
        return VelocityCommand()
    return VelocityCommand(0.0, 0.0, _clip(gains.kp_yaw * yaw_error, gains.max_wz))


class PDController:
    '''
    Stateful wrapper of :func:`velocity_command` carrying the previous error
    '''

    def __init__(self, gains: NavGains, dt: float = defaults.CONTROL_DT):
        self.gains = gains
        self.dt = dt
        self.previous_error: tuple[float, float] | None = None

    def reset(self) -> None:
        self.previous_error = None

    def __call__(self, pose: Pose, subgoal: SubGoal) -> VelocityCommand:
        command = velocity_command(pose, subgoal, self.gains, self.previous_error, self.dt)
        self.previous_error = position_error(pose, subgoal)
        return command


def subtask_done(pose: Pose, subgoal: SubGoal, threshold: float = DONE_DISTANCE) -> bool:
    '''
    Whether the robot is strictly closer than ``threshold`` to the sub-goal

    Distance is measured in the ground plane.
    '''
    return math.hypot(subgoal.x - pose.x, subgoal.y - pose.y) < threshold


def heading_done(pose: Pose, subgoal: SubGoal, tolerance: float) -> bool:
    return subgoal.yaw is None or abs(wrap_angle(subgoal.yaw - pose.yaw)) < tolerance


def _is_terrain(label) -> bool:
    if isinstance(label, str):
        return label.strip().lower() == 'terrain'
    return bool(label)


class ClimbMonitor:
    '''
    Debounced terrain-to-plane transition detector

    Fires once the stream has shown ``debounce`` consecutive terrain
    classifications and later ``debounce`` consecutive plane ones.
    Isolated plane ticks while on terrain are rejected as flicker.
    '''

    def __init__(self, debounce: int = 10):
        if debounce < 1:
            raise ValueError(f"debounce must be at least 1, got {debounce}")
        self.debounce = debounce
        self.reset()

    def reset(self) -> None:
        self.entered = False
        self.terrain_run = 0
        self.plane_run = 0
        self.done = False

    def update(self, label) -> bool:
        if self.done:
            return True
        if _is_terrain(label):
            self.terrain_run += 1
            self.plane_run = 0
            if self.terrain_run >= self.debounce:
                self.entered = True
        else:
            self.terrain_run = 0
            self.plane_run += 1
            if self.entered and self.plane_run >= self.debounce:
                self.done = True
        return self.done


def climb_done(stream: Iterable, debounce: int = 10) -> bool:
    '''
    Whether a classification stream contains a debounced terrain-to-plane transition

    Labels are truthy for terrain (or the strings ``'terrain'`` / ``'plane'``).
    '''
    monitor = ClimbMonitor(debounce)
    return any(monitor.update(label) for label in stream)
