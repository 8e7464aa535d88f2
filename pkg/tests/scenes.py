"""Synthetic sensor scenes with closed-form expected pole-base pixels."""

import math

import numpy as np

from annofuse.annotators import LabeledCloud
from annofuse.geometry import CameraModel, Pose

CAM = CameraModel(fx=400.0, fy=400.0, cx=640.0, cy=360.0, width=1280, height=720)


def basis(yaw, pitch=0.0):
    """Camera right/down/forward in world coordinates; pitch > 0 tilts the view downward."""
    fwd_h = np.array([math.sin(yaw), math.cos(yaw), 0.0])
    right = np.array([math.cos(yaw), -math.sin(yaw), 0.0])
    up = np.array([0.0, 0.0, 1.0])
    forward = math.cos(pitch) * fwd_h - math.sin(pitch) * up
    down = np.cross(forward, right)
    return right, down, forward


def pose_from(position, yaw, pitch=0.0):
    right, down, forward = basis(yaw, pitch)
    r = np.vstack((right, down, forward))
    return Pose(r, -r @ np.asarray(position, float))


def pixel(cam, position, yaw, pitch, world_point):
    """Closed-form pinhole projection from explicit camera axes."""
    right, down, forward = basis(yaw, pitch)
    d = np.asarray(world_point, float) - np.asarray(position, float)
    x, y, z = d @ right, d @ down, d @ forward
    return cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy


def ground_grid(x_range, y_range, z, step=0.25):
    xs = np.arange(x_range[0], x_range[1] + 1e-9, step)
    ys = np.arange(y_range[0], y_range[1] + 1e-9, step)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack((gx.ravel(), gy.ravel(), np.full(gx.size, z)))


def pole_column(e, n, z0, height=3.0, half=0.1, per_level=4, levels=25):
    """Points on the edges of a square column; the bounding box is exactly known."""
    pts = []
    corners = [(-half, -half), (half, -half), (half, half), (-half, half)][:per_level]
    for k in range(levels):
        z = z0 + height * k / (levels - 1)
        for dx, dy in corners:
            pts.append((e + dx, n + dy, z))
    return np.array(pts)


def cloud(ground=(), poles=(), other=()):
    parts, labels = [], []
    for arr, lab in ((ground, "ground"), (poles, "pole"), (other, "other")):
        arr = np.asarray(arr, float).reshape(-1, 3)
        parts.append(arr)
        labels += [lab] * len(arr)
    return LabeledCloud(np.vstack(parts), np.array(labels, dtype=object))


# (camera position, yaw, pitch, ground z, map poles)
SCENES = {
    "level_origin": ((0.0, 0.0, 1.5), 0.0, 0.0, 0.0, [(0.0, 2.0), (1.5, 8.0), (-3.0, 12.0)]),
    "yawed_offset": ((10.0, -5.0, 2.0), math.radians(30), 0.0, 0.3,
                     [(13.0, 2.0), (16.0, 4.0), (12.0, 10.0)]),
    "pitched": ((-4.0, 3.0, 1.8), math.radians(-45), math.radians(8), -0.2,
                [(-9.0, 8.0), (-12.0, 9.5), (-8.0, 13.0)]),
}


def map_scene(name):
    position, yaw, pitch, gz, poles = SCENES[name]
    cx, cy = position[0], position[1]
    ground = ground_grid((cx - 32, cx + 32), (cy - 32, cy + 32), gz, step=0.5)
    expected = [pixel(CAM, position, yaw, pitch, (e, n, gz)) for e, n in poles]
    return poles, pose_from(position, yaw, pitch), cloud(ground=ground), expected


def lidar_scene(name):
    position, yaw, pitch, gz, poles = SCENES[name]
    cols = [pole_column(e, n, gz) for e, n in poles]
    expected = [pixel(CAM, position, yaw, pitch, (e, n, gz)) for e, n in poles]
    return cloud(poles=np.vstack(cols)), pose_from(position, yaw, pitch), expected
