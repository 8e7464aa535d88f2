"""Synthetic scenes and independent simulated annotators.

Every image draws from its own generator seeded by ``(seed, role, image index)``
so results do not depend on how images are distributed over workers.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping, Optional

from ._parallel import parallel_map
from .model import AnnotationSet, Dataset, ImageRecord, PointAnnotation
from .rng import GENERATOR_NAME, Xoshiro256, derive_seed

MAX_ATTEMPTS = 1000
# densest packing of discs of diameter min_separation (hexagonal)
_PACKING = math.pi / (2 * math.sqrt(3))


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SourceProfile:
    recall: float
    fp_per_image: float = 0.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.recall <= 1.0:
            raise SimulationError(f"recall {self.recall} outside [0, 1]")
        if self.fp_per_image < 0 or self.noise_sigma < 0:
            raise SimulationError("fp_per_image and noise_sigma must be non-negative")


@dataclass(frozen=True)
class SceneConfig:
    n_images: int = 100
    poles_per_image: tuple[int, int] = (0, 8)
    width: int = 1280
    height: int = 720
    min_separation: float = 60.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.poles_per_image
        object.__setattr__(self, "poles_per_image", (int(lo), int(hi)))
        if self.n_images < 0:
            raise SimulationError("n_images must be non-negative")
        if lo < 0 or hi < lo:
            raise SimulationError(f"empty or negative pole range {self.poles_per_image}")
        if self.width <= 0 or self.height <= 0:
            raise SimulationError("image dimensions must be positive")
        if not self.min_separation > 0:
            raise SimulationError("min_separation must be positive")


def image_id(index: int) -> str:
    return f"img_{index:05d}"


def _scene_image(cfg: SceneConfig, index: int) -> ImageRecord:
    rng = Xoshiro256(derive_seed(cfg.seed, "scene", index))
    n = rng.integers(*cfg.poles_per_image)
    iid = image_id(index)
    pts: list[tuple[float, float]] = []
    sep = cfg.min_separation
    for k in range(n):
        for _ in range(MAX_ATTEMPTS):
            u, v = rng.uniform() * cfg.width, rng.uniform() * cfg.height
            if all(math.hypot(u - a, v - b) >= sep for a, b in pts):
                pts.append((u, v))
                break
        else:
            raise SimulationError(
                f"{iid}: could not place pole {k + 1} of {n} at separation {sep} "
                f"after {MAX_ATTEMPTS} attempts")
    ref = AnnotationSet(iid, None, tuple(PointAnnotation(iid, None, u, v) for u, v in pts))
    return ImageRecord(iid, cfg.width, cfg.height, reference=ref)


def gen_scene(cfg: SceneConfig, jobs: int = 1) -> Dataset:
    """Reference-only dataset with uniformly placed, well separated pole bases."""
    hi = cfg.poles_per_image[1]
    # padded area bound: discs of radius sep/2 around every point stay within it
    area = (cfg.width + cfg.min_separation) * (cfg.height + cfg.min_separation)
    if hi * math.pi * (cfg.min_separation / 2) ** 2 > _PACKING * area:
        raise SimulationError(
            f"{hi} poles at separation {cfg.min_separation} cannot fit in "
            f"{cfg.width}x{cfg.height}")
    images = parallel_map(_scene_image, [(cfg, i) for i in range(cfg.n_images)], jobs)
    return Dataset((), tuple(images), {"generator": GENERATOR_NAME, "scene": _scene_meta(cfg)})


def _clamp(x: float, size: int) -> float:
    return min(max(x, 0.0), math.nextafter(float(size), 0.0))


def _source_image(image: ImageRecord, index: int, profile: SourceProfile, source: str,
                  seed: int) -> AnnotationSet:
    rng = Xoshiro256(derive_seed(seed, "source", source, index))
    seen = set()
    anns = []

    def emit(u, v):
        if (u, v) not in seen:
            seen.add((u, v))
            anns.append(PointAnnotation(image.id, source, u, v))

    reference = image.reference.annotations if image.reference is not None else ()
    for ref in reference:
        keep = rng.uniform() < profile.recall
        du, dv = rng.normal(), rng.normal()
        if keep:
            emit(_clamp(ref.u + profile.noise_sigma * du, image.width),
                 _clamp(ref.v + profile.noise_sigma * dv, image.height))
    for _ in range(rng.poisson(profile.fp_per_image)):
        emit(rng.uniform() * image.width, rng.uniform() * image.height)
    return AnnotationSet(image.id, source, tuple(anns))


def simulate_source(reference: Dataset, profile: SourceProfile, source: str,
                    seed: int, jobs: int = 1) -> dict[str, AnnotationSet]:
    """One simulated annotator over every image of ``reference``.

    True poles survive independently with probability ``recall`` and move by
    isotropic Gaussian noise (clamped into the image); a Poisson number of
    false annotations lands uniformly in each image.
    """
    args = [(img, i, profile, source, seed) for i, img in enumerate(reference.images)]
    sets = parallel_map(_source_image, args, jobs)
    return {img.id: s for img, s in zip(reference.images, sets)}


def _scene_meta(cfg: SceneConfig) -> dict:
    meta = asdict(cfg)
    meta["poles_per_image"] = list(cfg.poles_per_image)
    return meta


def simulate_dataset(scene: SceneConfig, profiles: Mapping[str, SourceProfile],
                     seed: Optional[int] = None, jobs: int = 1) -> Dataset:
    """Scene plus one simulated source per profile, in mapping order."""
    seed = scene.seed if seed is None else seed
    base = gen_scene(scene, jobs=jobs)
    per_source = {name: simulate_source(base, p, name, seed, jobs=jobs)
                  for name, p in profiles.items()}
    images = tuple(
        ImageRecord(img.id, img.width, img.height, img.raster,
                    {name: per_source[name][img.id] for name in profiles}, img.reference)
        for img in base.images)
    metadata = {
        "generator": GENERATOR_NAME,
        "seed": seed,
        "scene": _scene_meta(scene),
        "profiles": {name: asdict(p) for name, p in profiles.items()},
    }
    return Dataset(tuple(profiles), images, metadata)
