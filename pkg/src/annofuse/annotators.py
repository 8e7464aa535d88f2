"""The three automatic pole-base annotators.

Each works on precomputed inputs for one frame:

* ``map_annotate`` (source M): georeferenced map poles lifted to the local
  lidar ground height and projected into the image.
* ``seg_annotate`` (source S): pole-class blobs of a semantic mask that touch
  ground-class pixels.
* ``lidar_annotate`` (source L): Euclidean clusters of pole-labelled lidar
  points, projected through the bottom-face centre of their bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .geometry import CameraModel, Pose
from .model import AnnotationSet, PointAnnotation

GROUND, POLE, OTHER = "ground", "pole", "other"
LABELS = (GROUND, POLE, OTHER)
OCCLUSION_RADIUS_PX = 5.0


class AnnotatorError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotatorParams:
    ground_radius: float = 1.0
    min_ground_points: int = 5
    max_range: float = 30.0
    occlusion_margin: float = 0.5
    cluster_eps: float = 0.5
    cluster_min_pts: int = 10
    ground_adjacency: int = 3
    min_component_px: int = 50
    small_cluster_px: int = 10

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise AnnotatorError(f"annotator parameter {f.name} must be positive")


@dataclass(frozen=True, eq=False)
class LabeledCloud:
    points: np.ndarray  # (N, 3) world frame, metres
    labels: np.ndarray  # (N,) of "ground" / "pole" / "other"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        labels = np.asarray(self.labels, dtype=object).reshape(-1)
        if len(labels) != len(pts):
            raise AnnotatorError("cloud has different numbers of points and labels")
        if not np.all(np.isfinite(pts)):
            raise AnnotatorError("cloud contains non-finite coordinates")
        bad = set(labels.tolist()) - set(LABELS)
        if bad:
            raise AnnotatorError(f"unknown point label(s) {sorted(bad)}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)

    def select(self, label: str) -> np.ndarray:
        return self.points[self.labels == label]


@dataclass(frozen=True, eq=False)
class SemanticMask:
    classes: np.ndarray  # (H, W) integer class ids
    pole_classes: frozenset
    ground_classes: frozenset

    def __post_init__(self):
        object.__setattr__(self, "classes", np.asarray(self.classes))
        object.__setattr__(self, "pole_classes", frozenset(self.pole_classes))
        object.__setattr__(self, "ground_classes", frozenset(self.ground_classes))
        if self.classes.ndim != 2:
            raise AnnotatorError(f"mask must be 2-D, got shape {self.classes.shape}")
        if not self.pole_classes or not self.ground_classes:
            raise AnnotatorError("pole and ground class sets must be non-empty")
        clash = self.pole_classes & self.ground_classes
        if clash:
            raise AnnotatorError(f"class id(s) {sorted(clash)} declared as both pole and ground")


def _annotation_set(image_id: str, source: str, uv: Iterable) -> AnnotationSet:
    seen, anns = set(), []
    for u, v in uv:
        key = (float(u), float(v))
        if key in seen:
            continue
        seen.add(key)
        anns.append(PointAnnotation(image_id, source, key[0], key[1]))
    return AnnotationSet(image_id, source, tuple(anns))


def map_annotate(map_poles: Sequence[Sequence[float]], pose: Pose, cam: CameraModel,
                 cloud: LabeledCloud, params: AnnotatorParams = AnnotatorParams(),
                 image_id: str = "frame", source: str = "M") -> AnnotationSet:
    pose.validate()
    poles = np.asarray(map_poles, dtype=float).reshape(-1, 2)
    ground = cloud.select(GROUND)
    ground_tree = cKDTree(ground[:, :2]) if len(ground) else None
    center = pose.center

    # occluders: every non-ground point in front of the camera
    occ_world = cloud.points[cloud.labels != GROUND]
    occ_cam = pose.to_camera(occ_world)
    occ_cam = occ_cam[occ_cam[:, 2] > 0]
    occ_uv = cam.project(occ_cam) if len(occ_cam) else np.empty((0, 2))

    out = []
    for e, n in poles:
        if np.hypot(e - center[0], n - center[1]) > params.max_range:
            continue
        if ground_tree is None:
            continue
        near = ground_tree.query_ball_point([e, n], params.ground_radius)
        if len(near) < params.min_ground_points:
            continue
        z = float(np.median(ground[near, 2]))
        pc = pose.to_camera([e, n, z])[0]
        if pc[2] <= 0:
            continue
        uv = cam.project(pc)[0]
        if not cam.contains(uv)[0]:
            continue
        if len(occ_uv):
            close = np.hypot(occ_uv[:, 0] - uv[0], occ_uv[:, 1] - uv[1]) <= OCCLUSION_RADIUS_PX
            if np.any(occ_cam[close, 2] < pc[2] - params.occlusion_margin):
                continue
        out.append(uv)
    return _annotation_set(image_id, source, out)


def _ground_adjacent(bottom: int, cols: np.ndarray, ground: np.ndarray, reach: int) -> bool:
    lo, hi = bottom + 1, min(ground.shape[0], bottom + reach + 1)
    if lo >= hi:
        return False
    return bool(ground[lo:hi, cols].any())


def seg_annotate(mask: SemanticMask, params: AnnotatorParams = AnnotatorParams(),
                 image_id: str = "frame", source: str = "S") -> AnnotationSet:
    classes = mask.classes
    pole = np.isin(classes, list(mask.pole_classes))
    ground = np.isin(classes, list(mask.ground_classes))
    labels, count = ndimage.label(pole, structure=np.ones((3, 3), dtype=bool))
    out = []
    for comp, sl in enumerate(ndimage.find_objects(labels), start=1):
        rows, cols = np.nonzero(labels[sl] == comp)
        size = len(rows)
        rows = rows + sl[0].start
        cols = cols + sl[1].start
        bottom = int(rows.max())
        bottom_cols = cols[rows == bottom]
        adjacent = _ground_adjacent(bottom, bottom_cols, ground, params.ground_adjacency)
        large = size >= params.min_component_px
        small = params.small_cluster_px <= size < params.min_component_px
        if adjacent and (large or small):
            base_cols = cols[rows >= bottom - 2]
            out.append((float(np.median(base_cols)), float(bottom)))
    return _annotation_set(image_id, source, out)


def euclidean_clusters(points: np.ndarray, eps: float, min_pts: int = 1) -> list[np.ndarray]:
    """Connected components of the graph linking points closer than ``eps``.

    Returns index arrays ordered by their smallest index; components smaller
    than ``min_pts`` are dropped.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    n = len(points)
    if n == 0:
        return []
    pairs = cKDTree(points).query_pairs(eps, output_type="ndarray")
    if len(pairs):
        d = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=1)
        pairs = pairs[d < eps]
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    groups: dict[int, list[int]] = {}
    for idx, c in enumerate(comp):
        groups.setdefault(int(c), []).append(idx)
    return [np.array(g) for g in groups.values() if len(g) >= min_pts]


def lidar_annotate(cloud: LabeledCloud, pose: Pose, cam: CameraModel,
                   params: AnnotatorParams = AnnotatorParams(),
                   image_id: str = "frame", source: str = "L") -> AnnotationSet:
    pose.validate()
    pole_pts = cloud.select(POLE)
    out = []
    for idx in euclidean_clusters(pole_pts, params.cluster_eps, params.cluster_min_pts):
        pts = pole_pts[idx]
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        base = np.array([(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, lo[2]])
        pc = pose.to_camera(base)[0]
        if pc[2] <= 0:
            continue
        uv = cam.project(pc)[0]
        if cam.contains(uv)[0]:
            out.append(uv)
    return _annotation_set(image_id, source, out)
