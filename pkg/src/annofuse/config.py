"""Run configuration: built-in defaults, optionally overridden by a JSON file
(``--config`` or the ``ANNOFUSE_CONFIG`` environment variable), then by flags."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Mapping, Optional

from .annotators import AnnotatorParams
from .assoc import DEFAULT_THRESHOLD
from .evaluation import DEFAULT_EVAL_THRESHOLD, DEFAULT_IOU_MIN
from .fusion import DEFAULT_ORDER
from .masking import ExportConfig
from .simulate import SceneConfig, SourceProfile

CONFIG_ENV = "ANNOFUSE_CONFIG"


class ConfigError(ValueError):
    pass


# Profiles fitted to the published single-source counts over 939 images:
# recall = TP / 2846, fp_per_image = FP / 939, sigma = MAE-x / 0.6745
# (median of |N(0, sigma)| is 0.6745 sigma).
DEFAULT_PROFILES = {
    "M": SourceProfile(recall=0.398, fp_per_image=0.247, noise_sigma=6.43),
    "S": SourceProfile(recall=0.854, fp_per_image=4.0, noise_sigma=1.57),
    "L": SourceProfile(recall=0.260, fp_per_image=0.524, noise_sigma=3.97),
}


@dataclass(frozen=True)
class RunConfig:
    threshold: float = DEFAULT_THRESHOLD
    eval_threshold: float = DEFAULT_EVAL_THRESHOLD
    order: tuple[str, ...] = DEFAULT_ORDER
    policy: str = "atleast(3)"
    box_side: float = ExportConfig.box_side
    patch_side: float = ExportConfig.patch_side
    class_id: int = ExportConfig.class_id
    decimals: int = ExportConfig.decimals
    iou_min: float = DEFAULT_IOU_MIN
    jobs: int = 1
    # BDD100K / Cityscapes train ids: pole, traffic light, traffic sign; road, sidewalk, terrain
    pole_classes: tuple[int, ...] = (5, 6, 7)
    ground_classes: tuple[int, ...] = (0, 1, 9)
    annotator: AnnotatorParams = field(default_factory=AnnotatorParams)
    scene: SceneConfig = field(default_factory=SceneConfig)
    profiles: Mapping[str, SourceProfile] = field(default_factory=lambda: dict(DEFAULT_PROFILES))

    @property
    def export(self) -> ExportConfig:
        return ExportConfig(self.box_side, self.patch_side, self.class_id, self.decimals)


DEFAULTS = RunConfig()
_TUPLE_FIELDS = {"order", "pole_classes", "ground_classes"}


def _nested(cls, raw: Any, where: str):
    if not isinstance(raw, dict):
        raise ConfigError(f"config '{where}' must be an object")
    known = {f.name for f in fields(cls)}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"config '{where}': unknown key(s) {sorted(extra)}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config '{where}': {exc}") from exc


def config_from_dict(raw: Mapping[str, Any], base: RunConfig = DEFAULTS) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown config key(s) {sorted(extra)}")
    updates: dict[str, Any] = {}
    for key, value in raw.items():
        if key == "annotator":
            merged = {**asdict(base.annotator), **_check_obj(value, key)}
            updates[key] = _nested(AnnotatorParams, merged, key)
        elif key == "scene":
            merged = {**asdict(base.scene), **_check_obj(value, key)}
            if "poles_per_image" in merged:
                merged["poles_per_image"] = tuple(merged["poles_per_image"])
            updates[key] = _nested(SceneConfig, merged, key)
        elif key == "profiles":
            updates[key] = {name: _nested(SourceProfile, p, f"profiles.{name}")
                            for name, p in _check_obj(value, key).items()}
        elif key in _TUPLE_FIELDS:
            if not isinstance(value, list) or not value:
                raise ConfigError(f"config '{key}' must be a non-empty list")
            updates[key] = tuple(value)
        else:
            updates[key] = value
    try:
        return replace(base, **updates)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _check_obj(value, key):
    if not isinstance(value, dict):
        raise ConfigError(f"config '{key}' must be an object")
    return value


def load_config(path: Optional[str] = None) -> RunConfig:
    """Built-in defaults overlaid with ``path`` (or ``$ANNOFUSE_CONFIG`` when ``path`` is None)."""
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return DEFAULTS
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config_from_dict(raw)


def config_to_dict(cfg: RunConfig) -> dict:
    out = asdict(cfg)
    for key in _TUPLE_FIELDS:
        out[key] = list(out[key])
    out["scene"]["poles_per_image"] = list(cfg.scene.poles_per_image)
    return out
