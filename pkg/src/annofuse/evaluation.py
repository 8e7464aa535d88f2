"""Annotation and detection evaluation.

Point annotations are matched to the reference greedily by distance and
summarised as counts, precision, recall and MAE-x (median absolute error of
the horizontal coordinate). Detections are scored through box IoU into a
precision-recall curve.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .masking import square_box
from .model import BBoxLabel

DEFAULT_EVAL_THRESHOLD = 20.0
DEFAULT_IOU_MIN = 0.5


class EvaluationError(ValueError):
    pass


@dataclass
class MatchOutcome:
    tp: list = field(default_factory=list)  # (candidate, reference) pairs
    fp: list = field(default_factory=list)
    fn: list = field(default_factory=list)


@dataclass(frozen=True)
class MetricsReport:
    tp: int
    fp: int
    fn: int
    mae_x: Optional[float] = None

    @property
    def number(self) -> int:
        return self.tp + self.fp

    @property
    def precision(self) -> Optional[float]:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else None

    @property
    def recall(self) -> Optional[float]:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None

    def to_dict(self) -> dict:
        return {"number": self.number, "tp": self.tp, "fp": self.fp, "fn": self.fn,
                "precision": self.precision, "recall": self.recall, "mae_x": self.mae_x}


def _xy(p) -> tuple[float, float]:
    if hasattr(p, "u"):
        return (p.u, p.v)
    return (float(p[0]), float(p[1]))


def match_points(candidates: Sequence, reference: Sequence,
                 threshold: float = DEFAULT_EVAL_THRESHOLD) -> MatchOutcome:
    """Greedy one-to-one matching by ascending distance, pairs closer than ``threshold``.

    Equal distances are taken in (candidate index, reference index) order.
    """
    cand = [_xy(c) for c in candidates]
    ref = [_xy(r) for r in reference]
    pairs = []
    for i, (cu, cv) in enumerate(cand):
        for j, (ru, rv) in enumerate(ref):
            d = math.hypot(cu - ru, cv - rv)
            if d < threshold:
                pairs.append((d, i, j))
    pairs.sort()
    used_c, used_r = set(), set()
    out = MatchOutcome()
    for _, i, j in pairs:
        if i in used_c or j in used_r:
            continue
        used_c.add(i)
        used_r.add(j)
        out.tp.append((candidates[i], reference[j]))
    out.fp = [c for i, c in enumerate(candidates) if i not in used_c]
    out.fn = [r for j, r in enumerate(reference) if j not in used_r]
    return out


def point_metrics(outcomes: Iterable[MatchOutcome]) -> MetricsReport:
    tp = fp = fn = 0
    errors = []
    for o in outcomes:
        tp += len(o.tp)
        fp += len(o.fp)
        fn += len(o.fn)
        errors.extend(abs(_xy(c)[0] - _xy(r)[0]) for c, r in o.tp)
    mae_x = statistics.median(errors) if errors else None
    return MetricsReport(tp, fp, fn, mae_x)


def format_table(rows: Sequence[tuple[str, MetricsReport]], with_mae: bool = True) -> str:
    """Aligned text table with the columns of the published annotation tables."""
    header = ["Method", "Number", "FP", "TP", "FN", "Prec.", "Rec."]
    if with_mae:
        header.append("MAE-x")

    def pct(x):
        return "-" if x is None else f"{100 * x:.1f}"

    body = []
    for name, r in rows:
        line = [name, str(r.number), str(r.fp), str(r.tp), str(r.fn),
                pct(r.precision), pct(r.recall)]
        if with_mae:
            line.append("-" if r.mae_x is None else f"{r.mae_x:.2f}")
        body.append(line)
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    fmt = lambda row: "  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip()
    return "\n".join([fmt(header), fmt(["-" * w for w in widths])] + [fmt(b) for b in body]) + "\n"


# --- detections ------------------------------------------------------------

@dataclass(frozen=True)
class Detection:
    image_id: str
    box: BBoxLabel
    confidence: float


@dataclass(frozen=True)
class PRSample:
    threshold: float
    recall: float
    precision: float
    tp: bool


@dataclass(frozen=True)
class PRCurve:
    samples: tuple[PRSample, ...]
    n_references: int

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(s.recall, s.precision) for s in self.samples]


def box_from_point(p, side: float, width: int, height: int, class_id: int = 0) -> BBoxLabel:
    u, v = _xy(p)
    return square_box(u, v, side, width, height, class_id)


def iou(a: BBoxLabel, b: BBoxLabel) -> float:
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.w * a.h + b.w * b.h - inter
    return inter / union


def pr_curve(detections: Sequence[Detection],
             reference: Mapping[str, Sequence[BBoxLabel]],
             iou_min: float = DEFAULT_IOU_MIN) -> PRCurve:
    """Cumulative precision/recall after each detection, by descending confidence.

    A detection is a true positive when its best-IoU still unmatched reference
    box in the same image reaches ``iou_min``; that reference is then consumed.
    Detections in images absent from ``reference`` are false positives.
    """
    for n, d in enumerate(detections):
        if d.confidence is None:
            raise EvaluationError(f"detection {n} in image {d.image_id!r} has no confidence")
    n_ref = sum(len(v) for v in reference.values())
    order = sorted(range(len(detections)),
                   key=lambda i: (-detections[i].confidence, detections[i].image_id, i))
    matched: dict[str, set[int]] = {k: set() for k in reference}
    tp = fp = 0
    samples = []
    for i in order:
        det = detections[i]
        refs = reference.get(det.image_id, ())
        best_j, best = -1, -1.0
        for j, rbox in enumerate(refs):
            if j in matched[det.image_id]:
                continue
            score = iou(det.box, rbox)
            if score > best:
                best_j, best = j, score
        hit = best_j >= 0 and best >= iou_min
        if hit:
            matched[det.image_id].add(best_j)
            tp += 1
        else:
            fp += 1
        recall = tp / n_ref if n_ref else 0.0
        samples.append(PRSample(det.confidence, recall, tp / (tp + fp), hit))
    return PRCurve(tuple(samples), n_ref)


def pr_csv(curve: PRCurve) -> str:
    lines = ["threshold,recall,precision"]
    lines += [f"{s.threshold!r},{s.recall!r},{s.precision!r}" for s in curve.samples]
    return "\n".join(lines) + "\n"


def pr_svg(curve: PRCurve, size: int = 400, label: str = "") -> str:
    """Minimal standalone SVG plot of the curve (recall on x, precision on y)."""
    pad = 40
    span = size - 2 * pad

    def xy(r, p):
        return f"{pad + r * span:.2f},{pad + (1 - p) * span:.2f}"

    pts = " ".join(xy(s.recall, s.precision) for s in curve.samples)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="#888"/>',
        f'<text x="{size / 2:.0f}" y="{size - 8}" text-anchor="middle" font-size="12">recall</text>',
        f'<text x="12" y="{size / 2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 12 {size / 2:.0f})">precision</text>',
    ]
    if label:
        parts.append(f'<text x="{size / 2:.0f}" y="24" text-anchor="middle" font-size="13">{label}</text>')
    if pts:
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
