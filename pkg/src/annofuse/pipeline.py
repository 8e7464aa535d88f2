"""Dataset-level orchestration and the label-split interchange file.

Label-split file::

    {"sources": [...], "order": [...], "policy": "M&S", "threshold": 20.0,
     "images": [{"id", "width", "height", "raster"?,
                 "confident": [fused, ...], "ambiguous": [fused, ...]}]}

where ``fused`` is ``{"u", "v", "chosen_source", "contributing_sources",
"consensus_degree", "members": [[source, index], ...]}``.
"""

from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from ._parallel import parallel_map
from .assoc import AnnRef, Cluster, build_clusters
from .evaluation import MetricsReport, EvaluationError, match_points, point_metrics
from .fusion import FusedAnnotation, LabelSplit, split_labels
from .model import Dataset, DatasetError, ImageRecord, canonical_json
from .policy import ConsensusPolicy, bind_policy


@dataclass(frozen=True)
class LabelRecord:
    id: str
    width: int
    height: int
    raster: Optional[str]
    split: LabelSplit


@dataclass(frozen=True)
class LabelsFile:
    sources: tuple[str, ...]
    order: tuple[str, ...]
    policy: str
    threshold: float
    records: tuple[LabelRecord, ...]


def image_clusters(dataset: Dataset, image: ImageRecord, threshold: float) -> list[Cluster]:
    return build_clusters(dataset.sets_for(image), threshold)


def _fuse_image(sets, threshold, policy, order, image_id):
    clusters = build_clusters(sets, threshold)
    return split_labels(clusters, policy, order, image_id=image_id), [len(c) for c in clusters]


def fuse_dataset(dataset: Dataset, policy: ConsensusPolicy | str, order: Sequence[str],
                 threshold: float, jobs: int = 1) -> tuple[LabelsFile, Counter]:
    """Cluster and split every image; also returns the cluster-size histogram."""
    policy = bind_policy(policy, dataset.sources)
    order = tuple(order)
    args = [(dataset.sets_for(img), threshold, policy, order, img.id) for img in dataset.images]
    results = parallel_map(_fuse_image, args, jobs)
    hist: Counter = Counter()
    records = []
    for img, (split, sizes) in zip(dataset.images, results):
        hist.update(sizes)
        records.append(LabelRecord(img.id, img.width, img.height, img.raster, split))
    labels = LabelsFile(dataset.sources, order, policy.text, float(threshold), tuple(records))
    return labels, hist


def histogram_table(hist: Counter, n_sources: int) -> str:
    lines = ["degree  clusters"]
    for q in range(1, n_sources + 1):
        lines.append(f"{q:>6}  {hist.get(q, 0):>8}")
    lines.append(f"{'total':>6}  {sum(hist.values()):>8}")
    return "\n".join(lines) + "\n"


# --- label-split file --------------------------------------------------------

def _fused_to_dict(f: FusedAnnotation) -> dict:
    return {"u": float(f.u), "v": float(f.v), "chosen_source": f.chosen_source,
            "contributing_sources": list(f.contributing_sources),
            "consensus_degree": f.consensus_degree,
            "members": [[r.source, r.index] for r in f.members]}


def _fused_from_dict(raw: dict, image_id: str) -> FusedAnnotation:
    try:
        f = FusedAnnotation(image_id, float(raw["u"]), float(raw["v"]), raw["chosen_source"],
                            tuple(raw["contributing_sources"]),
                            tuple(AnnRef(s, int(i)) for s, i in raw.get("members", [])))
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"image {image_id!r}: malformed fused annotation {raw!r}") from exc
    if "consensus_degree" in raw and raw["consensus_degree"] != f.consensus_degree:
        raise DatasetError(f"image {image_id!r}: consensus_degree disagrees with contributing_sources")
    return f


def labels_to_dict(labels: LabelsFile) -> dict:
    images = []
    for rec in labels.records:
        d = {"id": rec.id, "width": rec.width, "height": rec.height,
             "confident": [_fused_to_dict(f) for f in rec.split.confident],
             "ambiguous": [_fused_to_dict(f) for f in rec.split.ambiguous]}
        if rec.raster is not None:
            d["raster"] = rec.raster
        images.append(d)
    return {"sources": list(labels.sources), "order": list(labels.order),
            "policy": labels.policy, "threshold": labels.threshold, "images": images}


def dumps_labels(labels: LabelsFile) -> str:
    return canonical_json(labels_to_dict(labels))


def load_labels(path: str | os.PathLike) -> LabelsFile:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}: invalid JSON ({exc})") from exc
    try:
        records = []
        for rimg in raw["images"]:
            iid = rimg["id"]
            split = LabelSplit(iid,
                               tuple(_fused_from_dict(f, iid) for f in rimg["confident"]),
                               tuple(_fused_from_dict(f, iid) for f in rimg["ambiguous"]))
            records.append(LabelRecord(iid, int(rimg["width"]), int(rimg["height"]),
                                       rimg.get("raster"), split))
        return LabelsFile(tuple(raw["sources"]), tuple(raw["order"]), raw["policy"],
                          float(raw["threshold"]), tuple(records))
    except (KeyError, TypeError) as exc:
        raise DatasetError(f"{path}: not a label-split file ({exc})") from exc


# --- evaluation against the reference -----------------------------------------

def _require_reference(dataset: Dataset):
    for img in dataset.images:
        if img.reference is None:
            raise EvaluationError(f"image {img.id!r} has no reference annotations")


def evaluate_source(dataset: Dataset, source: str, t_eval: float) -> MetricsReport:
    _require_reference(dataset)
    return point_metrics(match_points(img.annotation_set(source).annotations,
                                      img.reference.annotations, t_eval)
                         for img in dataset.images)


def evaluate_fused(dataset: Dataset, splits: dict[str, LabelSplit], t_eval: float) -> MetricsReport:
    """Score the confident labels of each image (images missing from ``splits`` count as empty)."""
    _require_reference(dataset)
    return point_metrics(
        match_points(splits[img.id].confident if img.id in splits else (),
                     img.reference.annotations, t_eval)
        for img in dataset.images)


def evaluate_policy(dataset: Dataset, policy: str, order: Sequence[str], threshold: float,
                    t_eval: float, jobs: int = 1) -> MetricsReport:
    labels, _ = fuse_dataset(dataset, policy, order, threshold, jobs=jobs)
    return evaluate_fused(dataset, {r.id: r.split for r in labels.records}, t_eval)
