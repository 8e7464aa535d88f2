"""Detector output files: a JSON array of ``{image_id, cx, cy, w, h, confidence}`` (pixels)."""

from __future__ import annotations

import json
import math

from .evaluation import Detection, EvaluationError
from .model import BBoxLabel

_KEYS = ("image_id", "cx", "cy", "w", "h")


def detections_from_list(raw) -> list[Detection]:
    if not isinstance(raw, list):
        raise EvaluationError("detections must be a JSON array")
    out = []
    for n, item in enumerate(raw):
        if not isinstance(item, dict):
            raise EvaluationError(f"detection {n}: expected an object")
        missing = [k for k in _KEYS if k not in item]
        if missing:
            raise EvaluationError(f"detection {n}: missing field(s) {missing}")
        conf = item.get("confidence")
        if conf is None:
            raise EvaluationError(f"detection {n} in image {item['image_id']!r}: confidence is required")
        vals = [item[k] for k in ("cx", "cy", "w", "h")] + [conf]
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v)
               for v in vals):
            raise EvaluationError(f"detection {n}: non-numeric or non-finite field")
        cx, cy, w, h, conf = (float(v) for v in vals)
        if w <= 0 or h <= 0:
            raise EvaluationError(f"detection {n}: box size must be positive")
        if not 0.0 <= conf <= 1.0:
            raise EvaluationError(f"detection {n}: confidence outside [0, 1]")
        out.append(Detection(str(item["image_id"]), BBoxLabel(int(item.get("class_id", 0)), cx, cy, w, h), conf))
    return out


def load_detections(path) -> list[Detection]:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise EvaluationError(f"{path}: invalid JSON ({exc})") from exc
    return detections_from_list(raw)


def dumps_detections(detections) -> str:
    return json.dumps([{"image_id": d.image_id, "cx": d.box.cx, "cy": d.box.cy, "w": d.box.w,
                        "h": d.box.h, "confidence": d.confidence} for d in detections],
                      sort_keys=True, indent=1) + "\n"
