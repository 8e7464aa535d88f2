"""Pinhole camera and rigid world-to-camera poses.

World frame is z-up (E, N, up). Camera frame: x right, y down, z forward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise GeometryError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise GeometryError("principal point outside the image")

    def project(self, cam_points: np.ndarray) -> np.ndarray:
        """(N, 3) camera-frame points -> (N, 2) pixels. Caller filters z <= 0."""
        p = np.asarray(cam_points, dtype=float).reshape(-1, 3)
        return np.column_stack((self.fx * p[:, 0] / p[:, 2] + self.cx,
                                self.fy * p[:, 1] / p[:, 2] + self.cy))

    def contains(self, uv: np.ndarray) -> np.ndarray:
        uv = np.asarray(uv, dtype=float).reshape(-1, 2)
        return ((uv[:, 0] >= 0) & (uv[:, 0] < self.width)
                & (uv[:, 1] >= 0) & (uv[:, 1] < self.height))


@dataclass(frozen=True, eq=False)
class Pose:
    """Maps world points into the camera frame: ``p_cam = R @ p_world + t``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def validate(self, tol: float = 1e-9) -> None:
        r = self.rotation
        if not np.all(np.isfinite(r)) or not np.all(np.isfinite(self.translation)):
            raise GeometryError("degenerate pose: non-finite values")
        if np.max(np.abs(r.T @ r - np.eye(3))) > tol:
            raise GeometryError("degenerate pose: rotation is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > tol:
            raise GeometryError("degenerate pose: rotation determinant is not +1")

    @property
    def center(self) -> np.ndarray:
        """Camera position in the world frame."""
        return -self.rotation.T @ self.translation

    def to_camera(self, world_points: np.ndarray) -> np.ndarray:
        p = np.asarray(world_points, dtype=float).reshape(-1, 3)
        return p @ self.rotation.T + self.translation

    @classmethod
    def level(cls, position=(0.0, 0.0, 0.0), yaw: float = 0.0) -> "Pose":
        """Horizontal camera at ``position`` looking along heading ``yaw``.

        ``yaw`` is measured from north (+N) towards east, in radians. With the
        default yaw the optical axis points north and image x points east.
        """
        s, c = math.sin(yaw), math.cos(yaw)
        forward = np.array([s, c, 0.0])
        right = np.array([c, -s, 0.0])
        down = np.array([0.0, 0.0, -1.0])
        r = np.vstack((right, down, forward))
        return cls(r, -r @ np.asarray(position, dtype=float))

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return (np.array_equal(self.rotation, other.rotation)
                and np.array_equal(self.translation, other.translation))

    __hash__ = None
