from __future__ import annotations

import os
import threading

from crosslab.utils import append_csv_row

TRAJECTORY_COLUMNS = (
    'env_id', 't', 'x', 'y', 'z', 'roll', 'pitch', 'yaw',
    'vx', 'vy', 'vz', 'wx', 'wy', 'wz', 'cmd_vx', 'cmd_vy', 'cmd_wz',
    *(f"action_{i}" for i in range(12)),
    'lin_vel', 'ang_vel', 'alive', 'energy', 'joint_vel', 'joint_acc',
    'ang_stability', 'feet_air', 'balance', 'total', 'status',
)


class TrajectoryLog:
    '''
    Per-control-step CSV log of base pose, velocities, command, action and reward terms
    '''

    def __init__(self, path: str, filename: str = 'trajectory.csv'):
        os.makedirs(path, mode=0o700, exist_ok=True)
        self.filename = os.path.join(path, filename)
        self.rows = 0
        self._lock = threading.Lock()

    def record(self, env_id, state, command, action, reward, status) -> None:
        roll, pitch, yaw = state.euler
        row = {
            'env_id': env_id, 't': round(state.t, 10),
            'x': float(state.position[0]), 'y': float(state.position[1]), 'z': float(state.position[2]),
            'roll': roll, 'pitch': pitch, 'yaw': yaw,
            'cmd_vx': float(command[0]), 'cmd_vy': float(command[1]), 'cmd_wz': float(command[2]),
            'status': status.value,
        }
        for name, value in zip(('vx', 'vy', 'vz'), state.lin_vel):
            row[name] = float(value)
        for name, value in zip(('wx', 'wy', 'wz'), state.ang_vel):
            row[name] = float(value)
        for i, value in enumerate(action):
            row[f"action_{i}"] = float(value)
        row.update(reward.to_dict())
        with self._lock:
            append_csv_row(self.filename, TRAJECTORY_COLUMNS, row)
            self.rows += 1
