"""Black patches over ambiguous labels and box-label export for detector training."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import BBoxLabel

DEFAULT_SIDE = 250.0


class MaskingError(ValueError):
    pass


@dataclass(frozen=True)
class ExportConfig:
    box_side: float = DEFAULT_SIDE
    patch_side: float = DEFAULT_SIDE
    class_id: int = 0
    # 8 places keep the denormalised box within 1e-4 px up to 20000 px wide images
    decimals: int = 8

    def __post_init__(self):
        if not (self.box_side > 0 and self.patch_side > 0):
            raise MaskingError("box and patch sides must be positive")
        if self.decimals < 1:
            raise MaskingError("decimals must be >= 1")


@dataclass(frozen=True)
class PatchSpec:
    """Integer pixel rectangle; ``right`` and ``bottom`` are exclusive."""

    image_id: str
    u: float
    v: float
    side: float
    left: int
    top: int
    right: int
    bottom: int


def _check_point(u: float, v: float, width: int, height: int) -> None:
    if width <= 0 or height <= 0:
        raise MaskingError(f"non-positive image dimensions {width}x{height}")
    if not (0 <= u < width and 0 <= v < height):
        raise MaskingError(f"annotation ({u}, {v}) outside {width}x{height} image")


def _round(x: float) -> int:
    return math.floor(x + 0.5)


def make_patches(ambiguous: Iterable, width: int, height: int,
                 side: float = DEFAULT_SIDE) -> list[PatchSpec]:
    """One clipped square patch per ambiguous annotation (anything with u, v, image_id)."""
    patches = []
    half = side / 2
    for a in ambiguous:
        _check_point(a.u, a.v, width, height)
        left = max(0, _round(a.u - half))
        top = max(0, _round(a.v - half))
        right = min(width, _round(a.u + half))
        bottom = min(height, _round(a.v + half))
        if right <= left or bottom <= top:
            raise MaskingError(f"patch for ({a.u}, {a.v}) is empty after clipping")
        patches.append(PatchSpec(a.image_id, a.u, a.v, side, left, top, right, bottom))
    return patches


def apply_patches(raster: np.ndarray, patches: Sequence[PatchSpec],
                  width: int | None = None, height: int | None = None) -> np.ndarray:
    """Return a copy of ``raster`` with every patch rectangle set to zero."""
    h, w = raster.shape[:2]
    if (width is not None and width != w) or (height is not None and height != h):
        raise MaskingError(f"raster is {w}x{h}, image record says {width}x{height}")
    out = raster.copy()
    for p in patches:
        if p.right > w or p.bottom > h:
            raise MaskingError(f"patch {p} exceeds raster of {w}x{h}")
        out[p.top:p.bottom, p.left:p.right, ...] = 0
    return out


def square_box(u: float, v: float, side: float, width: int, height: int,
               class_id: int = 0) -> BBoxLabel:
    """Square of ``side`` centred on (u, v), clipped to the image.

    Clipping moves only the offending edges; centre and size are recomputed
    from the clipped rectangle.
    """
    _check_point(u, v, width, height)
    half = side / 2
    left, right = max(0.0, u - half), min(float(width), u + half)
    top, bottom = max(0.0, v - half), min(float(height), v + half)
    return BBoxLabel.from_corners(left, top, right, bottom, class_id)


def format_label(box: BBoxLabel, width: int, height: int, decimals: int = 8) -> str:
    vals = (box.cx / width, box.cy / height, box.w / width, box.h / height)
    return " ".join([str(box.class_id)] + [f"{x:.{decimals}f}" for x in vals])


def parse_label(line: str, width: int, height: int) -> BBoxLabel:
    """Inverse of :func:`format_label`, back to pixels."""
    parts = line.split()
    if len(parts) != 5:
        raise MaskingError(f"label line needs 5 fields, got {len(parts)}: {line!r}")
    cx, cy, w, h = (float(x) for x in parts[1:])
    return BBoxLabel(int(parts[0]), cx * width, cy * height, w * width, h * height)


def export_labels(confident: Iterable, width: int, height: int,
                  cfg: ExportConfig = ExportConfig()) -> str:
    """Label file text: ``class cx cy w h`` normalised, one line per annotation."""
    lines = [format_label(square_box(a.u, a.v, cfg.box_side, width, height, cfg.class_id),
                          width, height, cfg.decimals)
             for a in confident]
    return "".join(line + "\n" for line in lines)
