from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from crosslab.exceptions import InvalidInputError
from crosslab.nav.camera import camera_origin, goal_in_world, project, world_to_camera
from crosslab.nav.types import CameraIntrinsics, Goal, SubGoal, wrap_angle
from crosslab.terrain.world import HeightFieldWorld, Pose
from crosslab.utils.seeding import rng_from_seed

KINDS = ('stairs', 'ramp', 'gap', 'door')
CLIMB_KINDS = ('stairs', 'ramp')
DIRECTIONS = {'forward': 0.0, 'left': math.pi / 2, 'right': -math.pi / 2, 'backward': math.pi}

STEP_DEPTH = 0.3
STEP_HEIGHT = 0.12
NUM_STEPS = 4
RAMP_LENGTH = 1.2
RAMP_RISE = 0.3
GAP_WIDTH = 0.3
GAP_DEPTH = 0.2
WALL_THICKNESS = 0.1
WALL_HEIGHT = 1.0
DOOR_WIDTH = 1.0
MARKER_WIDTH = 1.6
CROSS_MARGIN = 0.2
FACING_BEARING = 0.2
FACING_SLACK = 0.3


@dataclass(frozen=True)
class Intermediation:
    '''
    An obstacle the route must cross

    ``(x, y)`` is the center of its near edge and ``yaw`` the direction of
    travel across it.  The visible face is a vertical rectangle at the near
    edge, ``width`` wide and ``face_height`` tall; ``length`` is its extent
    along the route.
    '''
    kind: str
    x: float
    y: float
    yaw: float
    width: float
    length: float
    face_height: float
    base: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown intermediation kind {self.kind!r}")

    @property
    def normal(self) -> np.ndarray:
        return np.array([math.cos(self.yaw), math.sin(self.yaw), 0.0])

    @property
    def lateral(self) -> np.ndarray:
        return np.array([-math.sin(self.yaw), math.cos(self.yaw), 0.0])

    def route_coordinates(self, x: float, y: float) -> tuple[float, float]:
        dx, dy = x - self.x, y - self.y
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return c * dx + s * dy, -s * dx + c * dy

    def face_points(self, columns: int = 9, rows: int = 5) -> np.ndarray:
        lateral = np.linspace(-self.width / 2, self.width / 2, columns)
        heights = np.linspace(self.base, self.base + self.face_height, rows)
        grid_l, grid_z = np.meshgrid(lateral, heights, indexing='ij')
        points = np.array([self.x, self.y, 0.0]) + grid_l[..., None] * self.lateral
        points[..., 2] = grid_z
        return points.reshape(-1, 3)

    def to_dict(self) -> dict[str, Any]:
        return {'kind': self.kind, 'x': self.x, 'y': self.y, 'yaw': self.yaw, 'width': self.width,
                'length': self.length, 'face_height': self.face_height, 'base': self.base}

    @classmethod
    def from_dict(cls, data) -> Intermediation:
        try:
            return cls(str(data['kind']), float(data['x']), float(data['y']), float(data['yaw']),
                       float(data['width']), float(data['length']), float(data['face_height']),
                       float(data.get('base', 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed intermediation {data!r}") from exc


@dataclass(frozen=True)
class Scene:
    '''
    A navigation world: terrain, start pose, goal and the intermediations between
    '''
    world: HeightFieldWorld = field(repr=False)
    start: Pose
    goal: Goal
    intermediations: tuple[Intermediation, ...]
    camera: CameraIntrinsics
    camera_height: float = 0.3
    name: str = ''

    @property
    def goal_world(self) -> SubGoal:
        return goal_in_world(self.goal, self.start)

    def ground(self, x: float, y: float) -> float:
        return self.world.height_at(x, y)

    def descriptor(self, pose: Pose) -> dict[str, Any]:
        '''
        The scene as seen from ``pose``, the stand-in for a camera frame
        '''
        return {
            'intermediations': [i.to_dict() for i in self.intermediations],
            'start': list(self.start),
            'goal': self.goal.to_dict(),
            'pose': [float(v) for v in pose],
            'camera': self.camera.to_dict(),
            'camera_height': self.camera_height,
        }


def _route_heights(kind: str, s: np.ndarray, lateral: np.ndarray) -> np.ndarray:
    heights = np.zeros_like(s)
    ahead = s >= 0
    if kind == 'stairs':
        steps = np.minimum(np.floor(s / STEP_DEPTH) + 1, NUM_STEPS)
        heights = np.where(ahead, STEP_HEIGHT * steps, 0.0)
    elif kind == 'ramp':
        heights = np.where(ahead, RAMP_RISE * np.clip(s / RAMP_LENGTH, 0.0, 1.0), 0.0)
    elif kind == 'gap':
        heights = np.where(ahead & (s < GAP_WIDTH), -GAP_DEPTH, 0.0)
    elif kind == 'door':
        wall = ahead & (s < WALL_THICKNESS) & (np.abs(lateral) > DOOR_WIDTH / 2)
        heights = np.where(wall, WALL_HEIGHT, 0.0)
    return heights


def _shape(kind: str) -> tuple[float, float, float]:
    '''
    ``(length, width, face_height)`` of an intermediation kind
    '''
    return {
        'stairs': ((NUM_STEPS - 1) * STEP_DEPTH, MARKER_WIDTH, NUM_STEPS * STEP_HEIGHT),
        'ramp': (RAMP_LENGTH, MARKER_WIDTH, RAMP_RISE),
        'gap': (GAP_WIDTH, MARKER_WIDTH, 0.0),
        'door': (WALL_THICKNESS, DOOR_WIDTH, WALL_HEIGHT),
    }[kind]


def build_scene(kind: str | None, direction: str, seed: int, nav_config, cell_size: float = 0.05) -> Scene:
    '''
    Generate a seeded scene with one intermediation between start and goal

    The robot starts at the origin facing +x; the route leaves in
    ``direction`` (forward, left, right or backward).  The seed jitters the
    distance to the intermediation and the lateral offsets.  ``kind=None``
    builds open flat ground.
    '''
    if direction not in DIRECTIONS:
        raise InvalidInputError(f"unknown route direction {direction!r}")
    if kind is not None and kind not in KINDS:
        raise InvalidInputError(f"unknown intermediation kind {kind!r}")
    rng = rng_from_seed(seed)
    yaw = DIRECTIONS[direction]
    distance = nav_config.intermediation_distance + rng.uniform(-0.3, 0.3)
    offset = rng.uniform(-0.3, 0.3)
    length, width, face_height = _shape(kind or 'gap')
    goal_along = distance + length + nav_config.goal_beyond + rng.uniform(0.0, 0.5)
    goal_lateral = rng.uniform(-0.5, 0.5)
    extent = math.ceil((goal_along + 2.5) / cell_size) * cell_size
    n = int(round(2 * extent / cell_size)) + 1
    axis = -extent + cell_size * np.arange(n)
    gx, gy = np.meshgrid(axis, axis, indexing='ij')
    c, s_ = math.cos(yaw), math.sin(yaw)
    along = c * gx + s_ * gy - distance
    lateral = -s_ * gx + c * gy - offset
    heights = _route_heights(kind, along, lateral) if kind else np.zeros_like(along)
    world = HeightFieldWorld.from_array(heights, cell_size, origin=(-extent, -extent))
    intermediations = ()
    if kind is not None:
        if kind == 'gap':
            face_height = nav_config.face_height
        intermediations = (Intermediation(kind, distance * c - offset * s_, distance * s_ + offset * c, yaw,
                                          width, length, face_height),)
    gxw = goal_along * c - goal_lateral * s_
    gyw = goal_along * s_ + goal_lateral * c
    goal = Goal(gxw, gyw, world.height_at(gxw, gyw), wrap_angle(yaw),
                description=f"{direction} past the {kind}" if kind else direction)
    return Scene(world, Pose(0.0, 0.0, 0.0, 0.0), goal, intermediations,
                 CameraIntrinsics.from_config(nav_config), nav_config.camera_height,
                 name=f"{kind or 'flat'}-{direction}-{seed}")


def render_depth(intermediations, pose: Pose, intrinsics: CameraIntrinsics, camera_height: float) -> np.ndarray:
    '''
    Depth image of the intermediation faces seen from ``pose``

    Depth is the distance along the optical axis; pixels that see no face
    hold 0, the invalid-depth marker.
    '''
    u = np.arange(intrinsics.width, dtype=np.float64)
    v = np.arange(intrinsics.height, dtype=np.float64)
    a = (u[None, :] - intrinsics.u0) / intrinsics.fx
    b = (v[:, None] - intrinsics.v0) / intrinsics.fy
    forward = np.array([math.cos(pose.yaw), math.sin(pose.yaw), 0.0])
    right = np.array([math.sin(pose.yaw), -math.cos(pose.yaw), 0.0])
    # world ray per pixel with unit optical-axis component
    rays = np.empty((intrinsics.height, intrinsics.width, 3))
    rays[..., :2] = forward[:2] + a[..., None] * right[:2]
    rays[..., 2] = -b
    origin = camera_origin(pose, camera_height)
    depth = np.full((intrinsics.height, intrinsics.width), np.inf)
    for inter in intermediations:
        center = np.array([inter.x, inter.y, 0.0])
        facing = rays @ inter.normal
        with np.errstate(divide='ignore', invalid='ignore'):
            t = ((center - origin) @ inter.normal) / facing
        hits = origin + t[..., None] * rays
        across = (hits - center) @ inter.lateral
        up = hits[..., 2] - inter.base
        valid = (np.abs(facing) > 1e-9) & np.isfinite(t) & (t > 0) & (np.abs(across) <= inter.width / 2) \
            & (up >= 0) & (up <= inter.face_height)
        depth = np.where(valid & (t < depth), t, depth)
    return np.where(np.isfinite(depth), depth, 0.0)


def detect_bbox(inter: Intermediation, pose: Pose, intrinsics: CameraIntrinsics,
                camera_height: float) -> list[int] | None:
    '''
    Pixel box of an intermediation face, clipped to the image

    :return: ``[u_min, v_min, u_max, v_max]``, or ``None`` when the face is out of view.
    '''
    points = world_to_camera(inter.face_points(), pose, camera_height)
    points = points[points[:, 2] > 0.05]
    if len(points) == 0:
        return None
    pixels = np.array([project(p, intrinsics) for p in points])
    u_min, v_min = pixels.min(axis=0)
    u_max, v_max = pixels.max(axis=0)
    u_min, v_min = max(math.ceil(u_min), 0), max(math.ceil(v_min), 0)
    u_max, v_max = min(math.floor(u_max), intrinsics.width - 1), min(math.floor(v_max), intrinsics.height - 1)
    if u_min > u_max or v_min > v_max:
        return None
    return [int(u_min), int(v_min), int(u_max), int(v_max)]


def crossed(inter: Intermediation, pose: Pose) -> bool:
    along, _ = inter.route_coordinates(pose.x, pose.y)
    return along > inter.length + CROSS_MARGIN


def facing(inter: Intermediation, pose: Pose, standoff: float) -> bool:
    '''
    Whether the robot stands about ``standoff`` before the face, looking at it
    '''
    dx, dy = inter.x - pose.x, inter.y - pose.y
    bearing = wrap_angle(math.atan2(dy, dx) - pose.yaw)
    return abs(bearing) < FACING_BEARING and abs(math.hypot(dx, dy) - standoff) <= FACING_SLACK


def between(inter: Intermediation, start: Pose, goal: SubGoal) -> bool:
    '''
    Whether the straight route from start to goal passes the intermediation's face
    '''
    s0, _ = inter.route_coordinates(start.x, start.y)
    s1, _ = inter.route_coordinates(goal.x, goal.y)
    return s0 < 0 < s1
