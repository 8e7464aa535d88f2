"""Readers (and a few writers, for fixtures) of the annotators' input files.

* cloud: CSV ``x,y,z,label`` (optional header) or binary PLY whose vertex
  element has ``x``, ``y``, ``z`` and an integer ``label`` property
  (``0`` other, ``1`` ground, ``2`` pole)
* map: JSON array of ``[E, N]``
* pose: JSON ``{"rotation": [9 row-major values], "translation": [x, y, z]}``
* camera: JSON ``{"fx", "fy", "cx", "cy", "width", "height"}``
* mask: 8-bit single-channel PNG or PGM holding class ids
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .annotators import GROUND, OTHER, POLE, AnnotatorError, LabeledCloud, SemanticMask
from .geometry import CameraModel, Pose
from .raster import read_raster

PLY_LABELS = {0: OTHER, 1: GROUND, 2: POLE}
_PLY_CODES = {v: k for k, v in PLY_LABELS.items()}
_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


class InputFileError(ValueError):
    pass


def _read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputFileError(f"{path}: invalid JSON ({exc})") from exc


def load_map(path) -> np.ndarray:
    raw = _read_json(path)
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputFileError(f"{path}: map must be an array of [E, N] pairs") from exc
    if arr.size == 0:
        return np.empty((0, 2))
    if arr.ndim != 2 or arr.shape[1] != 2 or not np.all(np.isfinite(arr)):
        raise InputFileError(f"{path}: map must be an array of finite [E, N] pairs")
    return arr


def load_pose(path) -> Pose:
    raw = _read_json(path)
    try:
        rot = np.asarray(raw["rotation"], dtype=float)
        trans = np.asarray(raw["translation"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFileError(f"{path}: pose needs 'rotation' (9 values) and 'translation' (3)") from exc
    if rot.size != 9 or trans.size != 3:
        raise InputFileError(f"{path}: pose needs 'rotation' (9 values) and 'translation' (3)")
    return Pose(rot.reshape(3, 3), trans)


def save_pose(pose: Pose, path) -> None:
    Path(path).write_text(json.dumps({"rotation": pose.rotation.reshape(-1).tolist(),
                                      "translation": pose.translation.tolist()}) + "\n")


def load_camera(path) -> CameraModel:
    raw = _read_json(path)
    try:
        return CameraModel(float(raw["fx"]), float(raw["fy"]), float(raw["cx"]),
                           float(raw["cy"]), int(raw["width"]), int(raw["height"]))
    except (KeyError, TypeError) as exc:
        raise InputFileError(f"{path}: camera needs fx, fy, cx, cy, width, height") from exc


def save_camera(cam: CameraModel, path) -> None:
    Path(path).write_text(json.dumps({"fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
                                      "width": cam.width, "height": cam.height}) + "\n")


def _load_csv_cloud(path) -> LabeledCloud:
    pts, labels = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and row[0].strip().lower() == "x":
                continue
            if len(row) != 4:
                raise InputFileError(f"{path}:{lineno}: expected x,y,z,label")
            try:
                pts.append([float(row[0]), float(row[1]), float(row[2])])
            except ValueError as exc:
                raise InputFileError(f"{path}:{lineno}: bad coordinate") from exc
            labels.append(row[3].strip())
    try:
        return LabeledCloud(np.asarray(pts, dtype=float).reshape(-1, 3), np.asarray(labels, dtype=object))
    except AnnotatorError as exc:
        raise InputFileError(f"{path}: {exc}") from exc


def _load_ply_cloud(path) -> LabeledCloud:
    data = Path(path).read_bytes()
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise InputFileError(f"{path}: not a PLY file")
    body_start = data.index(b"\n", end) + 1
    header = data[:end].decode("ascii").splitlines()
    fmt = None
    elements = []  # (name, count, [(prop, dtype)])
    for line in header[1:]:
        parts = line.split()
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if parts[1] == "list":
                raise InputFileError(f"{path}: list properties are not supported")
            if not elements or parts[1] not in _PLY_TYPES:
                raise InputFileError(f"{path}: bad property line {line!r}")
            elements[-1][2].append((parts[2], _PLY_TYPES[parts[1]]))
    endian = {"binary_little_endian": "<", "binary_big_endian": ">"}.get(fmt)
    if endian is None:
        raise InputFileError(f"{path}: only binary PLY is supported (format {fmt})")
    offset = body_start
    for name, count, props in elements:
        dtype = np.dtype([(p, endian + t) for p, t in props])
        if name == "vertex":
            arr = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
            missing = {"x", "y", "z", "label"} - set(arr.dtype.names)
            if missing:
                raise InputFileError(f"{path}: vertex element lacks {sorted(missing)}")
            codes = arr["label"].astype(int)
            unknown = set(codes.tolist()) - PLY_LABELS.keys()
            if unknown:
                raise InputFileError(f"{path}: unknown label code(s) {sorted(unknown)}")
            pts = np.column_stack([arr["x"], arr["y"], arr["z"]]).astype(float)
            labels = np.array([PLY_LABELS[c] for c in codes.tolist()], dtype=object)
            try:
                return LabeledCloud(pts, labels)
            except AnnotatorError as exc:
                raise InputFileError(f"{path}: {exc}") from exc
        offset += dtype.itemsize * count
    raise InputFileError(f"{path}: no vertex element")


def load_cloud(path: str | os.PathLike) -> LabeledCloud:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    if path.suffix.lower() == ".ply":
        return _load_ply_cloud(path)
    return _load_csv_cloud(path)


def save_cloud_csv(cloud: LabeledCloud, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z", "label"])
        for (x, y, z), lab in zip(cloud.points.tolist(), cloud.labels.tolist()):
            w.writerow([repr(x), repr(y), repr(z), lab])


def save_cloud_ply(cloud: LabeledCloud, path) -> None:
    n = len(cloud.points)
    header = ("ply\nformat binary_little_endian 1.0\n"
              f"element vertex {n}\nproperty double x\nproperty double y\nproperty double z\n"
              "property uchar label\nend_header\n").encode("ascii")
    arr = np.zeros(n, dtype=[("x", "<f8"), ("y", "<f8"), ("z", "<f8"), ("label", "u1")])
    arr["x"], arr["y"], arr["z"] = cloud.points.T
    arr["label"] = [_PLY_CODES[lab] for lab in cloud.labels.tolist()]
    Path(path).write_bytes(header + arr.tobytes())


def load_mask(path, pole_classes, ground_classes) -> SemanticMask:
    arr = read_raster(path)
    if arr.ndim != 2:
        raise InputFileError(f"{path}: mask must be single-channel")
    try:
        return SemanticMask(arr, frozenset(pole_classes), frozenset(ground_classes))
    except AnnotatorError as exc:
        raise InputFileError(f"{path}: {exc}") from exc
