"""Domain types and the JSON interchange format for pointwise annotations.

Pixel coordinates are continuous: origin at the top-left corner, ``u`` grows
rightward and ``v`` downward. An annotation is in bounds when
``0 <= u < width`` and ``0 <= v < height``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence


class DatasetError(ValueError):
    """Raised for schema violations and invariant breaches in dataset files."""


@dataclass(frozen=True)
class PointAnnotation:
    image_id: str
    source: Optional[str]
    u: float
    v: float
    confidence: Optional[float] = None

    @property
    def point(self) -> tuple[float, float]:
        return (self.u, self.v)


@dataclass(frozen=True)
class AnnotationSet:
    image_id: str
    source: Optional[str]
    annotations: tuple[PointAnnotation, ...] = ()

    def __post_init__(self):
        seen = set()
        for idx, ann in enumerate(self.annotations):
            if ann.image_id != self.image_id or ann.source != self.source:
                raise DatasetError(
                    f"image {self.image_id!r}: annotation {idx} belongs to "
                    f"({ann.image_id!r}, {ann.source!r})"
                )
            if ann.point in seen:
                raise DatasetError(
                    f"image {self.image_id!r}, source {self.source!r}: duplicate "
                    f"annotation at index {idx} ({ann.u}, {ann.v})"
                )
            seen.add(ann.point)

    def __len__(self) -> int:
        return len(self.annotations)

    def __iter__(self):
        return iter(self.annotations)

    @classmethod
    def from_points(cls, image_id: str, source: Optional[str],
                    points: Iterable[Sequence[float]]) -> "AnnotationSet":
        anns = tuple(PointAnnotation(image_id, source, float(p[0]), float(p[1]))
                     for p in points)
        return cls(image_id, source, anns)


@dataclass(frozen=True)
class ImageRecord:
    id: str
    width: int
    height: int
    raster: Optional[str] = None
    # Only the sources present in the file are stored; see annotation_set().
    annotations: Mapping[str, AnnotationSet] = field(default_factory=dict)
    reference: Optional[AnnotationSet] = None

    def annotation_set(self, source: str) -> AnnotationSet:
        found = self.annotations.get(source)
        return found if found is not None else AnnotationSet(self.id, source, ())

    def in_bounds(self, u: float, v: float) -> bool:
        return 0 <= u < self.width and 0 <= v < self.height


@dataclass(frozen=True)
class Dataset:
    sources: tuple[str, ...]
    images: tuple[ImageRecord, ...] = ()
    metadata: Optional[Mapping[str, Any]] = None

    def __post_init__(self):
        validate_dataset(self)

    def image(self, image_id: str) -> ImageRecord:
        for img in self.images:
            if img.id == image_id:
                return img
        raise KeyError(image_id)

    def sets_for(self, image: ImageRecord) -> list[AnnotationSet]:
        """Per-source annotation sets of one image, in declared source order."""
        return [image.annotation_set(s) for s in self.sources]


@dataclass(frozen=True)
class BBoxLabel:
    """Axis-aligned box in pixels, stored as center and size."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    @property
    def left(self) -> float:
        return self.cx - self.w / 2

    @property
    def right(self) -> float:
        return self.cx + self.w / 2

    @property
    def top(self) -> float:
        return self.cy - self.h / 2

    @property
    def bottom(self) -> float:
        return self.cy + self.h / 2

    @classmethod
    def from_corners(cls, left, top, right, bottom, class_id: int = 0) -> "BBoxLabel":
        return cls(class_id, (left + right) / 2, (top + bottom) / 2,
                   right - left, bottom - top)


def validate_dataset(d: Dataset) -> None:
    if len(set(d.sources)) != len(d.sources):
        raise DatasetError(f"duplicate source ids in {list(d.sources)}")
    for s in d.sources:
        if not isinstance(s, str) or not s:
            raise DatasetError(f"invalid source id {s!r}")
    ids = set()
    for img in d.images:
        if img.id in ids:
            raise DatasetError(f"duplicate image id {img.id!r}")
        ids.add(img.id)
        if img.width <= 0 or img.height <= 0:
            raise DatasetError(f"image {img.id!r}: non-positive dimensions")
        for source, aset in img.annotations.items():
            if source not in d.sources:
                raise DatasetError(f"image {img.id!r}: unknown source id {source!r}")
            _check_set_bounds(img, aset)
        if img.reference is not None:
            _check_set_bounds(img, img.reference)


def _check_set_bounds(img: ImageRecord, aset: AnnotationSet) -> None:
    label = "reference" if aset.source is None else f"source {aset.source!r}"
    for idx, ann in enumerate(aset.annotations):
        if not (math.isfinite(ann.u) and math.isfinite(ann.v)):
            raise DatasetError(f"image {img.id!r}, {label}, index {idx}: non-finite coordinate")
        if not img.in_bounds(ann.u, ann.v):
            raise DatasetError(
                f"image {img.id!r}, {label}, index {idx}: annotation ({ann.u}, {ann.v}) "
                f"out of bounds for {img.width}x{img.height}"
            )
        if ann.confidence is not None and not 0.0 <= ann.confidence <= 1.0:
            raise DatasetError(f"image {img.id!r}, {label}, index {idx}: confidence outside [0, 1]")


# --- serialization ---------------------------------------------------------

_TOP_KEYS = {"sources", "images", "metadata"}
_IMAGE_KEYS = {"id", "width", "height", "raster", "annotations", "reference"}
_ANN_KEYS = {"u", "v", "confidence"}


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DatasetError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise DatasetError(f"{where}: non-finite number")
    return value


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DatasetError(f"{where}: expected an integer, got {value!r}")
    return value


def _check_keys(obj, allowed: set, required: set, where: str, strict: bool) -> None:
    if not isinstance(obj, dict):
        raise DatasetError(f"{where}: expected an object")
    missing = required - obj.keys()
    if missing:
        raise DatasetError(f"{where}: missing field(s) {sorted(missing)}")
    extra = obj.keys() - allowed
    if extra and strict:
        raise DatasetError(f"{where}: unknown field(s) {sorted(extra)}")


def _parse_points(raw, image_id: str, source: Optional[str], where: str,
                  strict: bool) -> AnnotationSet:
    if not isinstance(raw, list):
        raise DatasetError(f"{where}: expected a list of annotations")
    anns = []
    for idx, item in enumerate(raw):
        loc = f"{where}, index {idx}"
        _check_keys(item, _ANN_KEYS, {"u", "v"}, loc, strict)
        conf = item.get("confidence")
        if conf is not None:
            conf = _number(conf, loc + " confidence")
        anns.append(PointAnnotation(image_id, source, _number(item["u"], loc + " u"),
                                    _number(item["v"], loc + " v"), conf))
    return AnnotationSet(image_id, source, tuple(anns))


def dataset_from_dict(raw: Any, strict: bool = True) -> Dataset:
    _check_keys(raw, _TOP_KEYS, {"sources", "images"}, "dataset", strict)
    sources = raw["sources"]
    if not isinstance(sources, list) or not all(isinstance(s, str) for s in sources):
        raise DatasetError("dataset: 'sources' must be a list of strings")
    if not isinstance(raw["images"], list):
        raise DatasetError("dataset: 'images' must be a list")
    images = []
    for pos, rimg in enumerate(raw["images"]):
        where = f"image #{pos}"
        _check_keys(rimg, _IMAGE_KEYS, {"id", "width", "height"}, where, strict)
        image_id = rimg["id"]
        if not isinstance(image_id, str):
            raise DatasetError(f"{where}: 'id' must be a string")
        where = f"image {image_id!r}"
        raster = rimg.get("raster")
        if raster is not None and not isinstance(raster, str):
            raise DatasetError(f"{where}: 'raster' must be a string")
        rann = rimg.get("annotations", {})
        if not isinstance(rann, dict):
            raise DatasetError(f"{where}: 'annotations' must be an object")
        sets = {}
        for source in rann:
            if source not in sources:
                raise DatasetError(f"{where}: unknown source id {source!r}")
            sets[source] = _parse_points(rann[source], image_id, source,
                                         f"{where}, source {source!r}", strict)
        reference = None
        if "reference" in rimg and rimg["reference"] is not None:
            reference = _parse_points(rimg["reference"], image_id, None,
                                      f"{where}, reference", strict)
        images.append(ImageRecord(
            id=image_id,
            width=_integer(rimg["width"], where + " width"),
            height=_integer(rimg["height"], where + " height"),
            raster=raster,
            annotations=sets,
            reference=reference,
        ))
    metadata = raw.get("metadata")
    if metadata is not None and not isinstance(metadata, dict):
        raise DatasetError("dataset: 'metadata' must be an object")
    return Dataset(tuple(sources), tuple(images), metadata)


def _ann_to_dict(ann: PointAnnotation, with_confidence: bool = True) -> dict:
    out = {"u": float(ann.u), "v": float(ann.v)}
    if with_confidence:
        out["confidence"] = None if ann.confidence is None else float(ann.confidence)
    return out


def dataset_to_dict(d: Dataset) -> dict:
    images = []
    for img in d.images:
        rec: dict[str, Any] = {
            "id": img.id,
            "width": img.width,
            "height": img.height,
            "annotations": {s: [_ann_to_dict(a) for a in aset]
                            for s, aset in img.annotations.items()},
        }
        if img.raster is not None:
            rec["raster"] = img.raster
        if img.reference is not None:
            rec["reference"] = [_ann_to_dict(a, with_confidence=False) for a in img.reference]
        images.append(rec)
    out: dict[str, Any] = {"sources": list(d.sources), "images": images}
    if d.metadata is not None:
        out["metadata"] = d.metadata
    return out


def canonical_json(obj: Any) -> str:
    """Sorted keys, shortest round-trip floats, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False,
                      allow_nan=False) + "\n"


def dumps_dataset(d: Dataset) -> str:
    return canonical_json(dataset_to_dict(d))


def loads_dataset(text: str, strict: bool = True) -> Dataset:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"invalid JSON: {exc}") from exc
    return dataset_from_dict(raw, strict=strict)


def load_dataset(path: str | os.PathLike, strict: bool = True) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return loads_dataset(fh.read(), strict=strict)


def save_dataset(d: Dataset, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_dataset(d))
