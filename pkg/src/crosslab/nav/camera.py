from __future__ import annotations

import math

from collections.abc import Sequence

import numpy as np

from crosslab.exceptions import InvalidInputError, SkillFault
from crosslab.nav.types import CameraIntrinsics, Goal, SubGoal, wrap_angle
from crosslab.terrain.world import Pose

# camera frame: X right, Y down, Z along the optical axis (the robot heading)


def _axes(yaw: float) -> tuple[np.ndarray, np.ndarray]:
    forward = np.array([math.cos(yaw), math.sin(yaw), 0.0])
    right = np.array([math.sin(yaw), -math.cos(yaw), 0.0])
    return forward, right


def camera_origin(pose: Pose, camera_height: float) -> np.ndarray:
    return np.array([pose.x, pose.y, pose.z + camera_height])


def camera_to_world(point, pose: Pose, camera_height: float) -> np.ndarray:
    x, y, z = np.asarray(point, dtype=np.float64)
    forward, right = _axes(pose.yaw)
    return camera_origin(pose, camera_height) + z * forward + x * right - y * np.array([0.0, 0.0, 1.0])


def world_to_camera(point, pose: Pose, camera_height: float) -> np.ndarray:
    '''
    Express world points (``(..., 3)``) in the camera frame of a robot pose
    '''
    delta = np.asarray(point, dtype=np.float64) - camera_origin(pose, camera_height)
    forward, right = _axes(pose.yaw)
    return np.stack([delta @ right, -delta[..., 2], delta @ forward], axis=-1)


def unproject(i: float, j: float, depth: float, intrinsics: CameraIntrinsics) -> np.ndarray:
    '''
    Back-project a pixel with known depth into the camera frame

    ``X = (i - u0) d / fx``, ``Y = (j - v0) d / fy``, ``Z = d``.

    :raises: InvalidInputError for a non-positive depth or a pixel outside the image.
    '''
    if not math.isfinite(depth) or depth <= 0:
        raise InvalidInputError(f"depth must be positive, got {depth}")
    if not intrinsics.contains(i, j):
        raise InvalidInputError(f"pixel ({i}, {j}) lies outside the image")
    return np.array([(i - intrinsics.u0) * depth / intrinsics.fx,
                     (j - intrinsics.v0) * depth / intrinsics.fy,
                     float(depth)])


def project(point, intrinsics: CameraIntrinsics) -> tuple[float, float]:
    x, y, z = (float(v) for v in point)
    if z <= 0:
        raise InvalidInputError(f"cannot project a point at depth {z}")
    return intrinsics.u0 + intrinsics.fx * x / z, intrinsics.v0 + intrinsics.fy * y / z


def check_bbox(bbox: Sequence[int], intrinsics: CameraIntrinsics) -> tuple[int, int, int, int]:
    '''
    Validate an inclusive pixel box ``(u_min, v_min, u_max, v_max)``
    '''
    if len(bbox) != 4:
        raise InvalidInputError(f"bounding box needs four values, got {bbox!r}")
    u_min, v_min, u_max, v_max = (int(v) for v in bbox)
    if not (0 <= u_min <= u_max < intrinsics.width and 0 <= v_min <= v_max < intrinsics.height):
        raise InvalidInputError(f"bounding box {bbox!r} does not lie inside the image")
    return u_min, v_min, u_max, v_max


def median_depth(depth: np.ndarray, bbox: Sequence[int]) -> float:
    '''
    Median of the valid (finite, positive) depths inside a box

    :raises: SkillFault when the box holds no valid depth.
    '''
    u_min, v_min, u_max, v_max = bbox
    patch = np.asarray(depth)[v_min:v_max + 1, u_min:u_max + 1]
    valid = patch[np.isfinite(patch) & (patch > 0)]
    if valid.size == 0:
        raise SkillFault(f"no valid depth inside bounding box {tuple(bbox)}")
    return float(np.median(valid))


def bbox_point(bbox: Sequence[int], depth: np.ndarray, intrinsics: CameraIntrinsics,
               pose: Pose, camera_height: float) -> np.ndarray:
    '''
    World position of a detected box: its center unprojected at the median depth
    '''
    u_min, v_min, u_max, v_max = check_bbox(bbox, intrinsics)
    d = median_depth(depth, (u_min, v_min, u_max, v_max))
    center = unproject((u_min + u_max) / 2.0, (v_min + v_max) / 2.0, d, intrinsics)
    return camera_to_world(center, pose, camera_height)


def subgoal_from_bbox(bbox: Sequence[int], depth: np.ndarray, intrinsics: CameraIntrinsics, pose: Pose,
                      standoff: float = 0.5, camera_height: float = 0.3) -> SubGoal:
    '''
    Sub-goal short of a detected intermediation, facing it

    The sub-goal lies on the line of sight to the box center, ``standoff``
    metres before it, with its heading along that line.

    :raises: SkillFault when there is no valid depth in the box.
    '''
    point = bbox_point(bbox, depth, intrinsics, pose, camera_height)
    dx, dy = point[0] - pose.x, point[1] - pose.y
    distance = math.hypot(dx, dy)
    bearing = math.atan2(dy, dx) if distance > 0 else pose.yaw
    reach = max(distance - standoff, 0.0)
    return SubGoal(pose.x + reach * math.cos(bearing), pose.y + reach * math.sin(bearing),
                   pose.z, wrap_angle(bearing))


def to_body(pose: Pose, x: float, y: float) -> tuple[float, float]:
    dx, dy = x - pose.x, y - pose.y
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    return c * dx + s * dy, -s * dx + c * dy


def from_body(pose: Pose, x: float, y: float) -> tuple[float, float]:
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    return pose.x + c * x - s * y, pose.y + s * x + c * y


def across_subgoal(target, goal_world: SubGoal, pose: Pose) -> SubGoal:
    '''
    Sub-goal past an intermediation, on the horizontal line of the final goal

    In the robot frame the sub-goal keeps the lateral offset of the
    intermediation and the forward distance of the goal, so the robot
    crosses straight through and stops level with the goal.
    '''
    goal_forward, _ = to_body(pose, goal_world.x, goal_world.y)
    _, target_lateral = to_body(pose, float(target[0]), float(target[1]))
    x, y = from_body(pose, goal_forward, target_lateral)
    return SubGoal(x, y, goal_world.z, pose.yaw)


def goal_in_world(goal: Goal, start: Pose) -> SubGoal:
    x, y = from_body(start, goal.x, goal.y)
    return SubGoal(x, y, start.z + goal.z, wrap_angle(start.yaw + goal.yaw))


def goal_subgoal(goal: Goal, start: Pose, pose: Pose) -> SubGoal:
    '''
    The final goal as a sub-goal, expressed relative to the current pose

    :return: ``(forward, left, dz, dyaw)`` of the goal seen from ``pose``.
    '''
    world = goal_in_world(goal, start)
    forward, left = to_body(pose, world.x, world.y)
    return SubGoal(forward, left, world.z - pose.z, wrap_angle(world.yaw - pose.yaw))
