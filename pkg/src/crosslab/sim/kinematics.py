from __future__ import annotations

import math

import numpy as np

THIGH_LENGTH = 0.2
CALF_LENGTH = 0.2
# legs ordered FR, FL, RR, RL
HIP_OFFSETS = np.array([
    [0.18, -0.1, 0.0],
    [0.18, 0.1, 0.0],
    [-0.18, -0.1, 0.0],
    [-0.18, 0.1, 0.0],
])
NOMINAL_JOINTS = np.array([
    -0.1, 0.8, -1.5,
    0.1, 0.8, -1.5,
    -0.1, 0.8, -1.5,
    0.1, 0.8, -1.5,
])
JOINT_LOWER = np.tile([-0.8, -1.0, -2.7], 4)
JOINT_UPPER = np.tile([0.8, 3.0, -0.5], 4)
_JAC_EPS = 1e-6


def leg_positions(joints: np.ndarray) -> np.ndarray:
    '''
    Foot positions in the base frame for 12 joint angles

    Each leg has hip roll, thigh pitch and calf pitch; returns shape (4, 3).
    '''
    q = np.asarray(joints, dtype=np.float64).reshape(4, 3)
    roll, thigh, calf = q[:, 0], q[:, 1], q[:, 2]
    x = -THIGH_LENGTH * np.sin(thigh) - CALF_LENGTH * np.sin(thigh + calf)
    zs = -THIGH_LENGTH * np.cos(thigh) - CALF_LENGTH * np.cos(thigh + calf)
    y = -zs * np.sin(roll)
    z = zs * np.cos(roll)
    return HIP_OFFSETS + np.stack([x, y, z], axis=1)


def leg_jacobians(joints: np.ndarray) -> np.ndarray:
    '''
    Forward-difference Jacobians d foot / d joint, shape (4, 3, 3)
    '''
    q = np.asarray(joints, dtype=np.float64).reshape(4, 3)
    base = leg_positions(q)
    jac = np.empty((4, 3, 3))
    for j in range(3):
        bumped = q.copy()
        bumped[:, j] += _JAC_EPS
        jac[:, :, j] = (leg_positions(bumped) - base) / _JAC_EPS
    return jac


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_from_euler(roll: float, pitch: float, yaw: float) -> np.ndarray:
    cr, sr = math.cos(roll / 2), math.sin(roll / 2)
    cp, sp = math.cos(pitch / 2), math.sin(pitch / 2)
    cy, sy = math.cos(yaw / 2), math.sin(yaw / 2)
    return np.array([
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ])


def quat_to_euler(q: np.ndarray) -> tuple[float, float, float]:
    w, x, y, z = q
    roll = math.atan2(2 * (w * x + y * z), 1 - 2 * (x * x + y * y))
    pitch = math.asin(max(-1.0, min(1.0, 2 * (w * y - z * x))))
    yaw = math.atan2(2 * (w * z + x * y), 1 - 2 * (y * y + z * z))
    return roll, pitch, yaw


def integrate_quat(q: np.ndarray, omega_body: np.ndarray, dt: float) -> np.ndarray:
    q = q + 0.5 * dt * quat_multiply(q, np.array([0.0, *omega_body]))
    return q / np.linalg.norm(q)
