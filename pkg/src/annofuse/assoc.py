"""Cross-source data association: mutual nearest neighbours merged into clusters."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .model import AnnotationSet, PointAnnotation

DEFAULT_THRESHOLD = 20.0


class AssociationError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class AnnRef:
    source: str
    index: int


@dataclass(frozen=True)
class MatchPair:
    a: AnnRef
    b: AnnRef
    distance: float


@dataclass(frozen=True)
class Cluster:
    """Annotations judged to denote the same object; at most one per source.

    ``refs`` and ``members`` are parallel and ordered by declared source order.
    """

    image_id: str
    refs: tuple[AnnRef, ...]
    members: tuple[PointAnnotation, ...]

    @property
    def sources(self) -> frozenset[str]:
        return frozenset(r.source for r in self.refs)

    def __len__(self) -> int:
        return len(self.refs)


def _check_threshold(threshold: float) -> None:
    if not (math.isfinite(threshold) and threshold > 0):
        raise AssociationError(f"association threshold must be positive and finite, got {threshold}")


def _nearest(p: PointAnnotation, others: Sequence[PointAnnotation]) -> tuple[int, float]:
    best, best_d = -1, math.inf
    for j, q in enumerate(others):
        d = math.hypot(p.u - q.u, p.v - q.v)
        if d < best_d:
            best, best_d = j, d
    return best, best_d


def pairwise_match(set_a: AnnotationSet, set_b: AnnotationSet,
                   threshold: float = DEFAULT_THRESHOLD) -> list[MatchPair]:
    """Mutual nearest-neighbour pairs between two sets closer than ``threshold``.

    Nearest-neighbour ties resolve to the lower index. Output is sorted by
    distance, then index in ``set_a``, then index in ``set_b``.
    """
    _check_threshold(threshold)
    if set_a.image_id != set_b.image_id:
        raise AssociationError(f"image mismatch: {set_a.image_id!r} vs {set_b.image_id!r}")
    if set_a.source == set_b.source:
        raise AssociationError(f"cannot match source {set_a.source!r} with itself")
    a_anns, b_anns = set_a.annotations, set_b.annotations
    if not a_anns or not b_anns:
        return []
    nn_of_b = [_nearest(q, a_anns)[0] for q in b_anns]
    pairs = []
    for i, p in enumerate(a_anns):
        j, d = _nearest(p, b_anns)
        if d < threshold and nn_of_b[j] == i:
            pairs.append(MatchPair(AnnRef(set_a.source, i), AnnRef(set_b.source, j), d))
    pairs.sort(key=lambda m: (m.distance, m.a.index, m.b.index))
    return pairs


class _SourceAwareUnionFind:
    """Union-find whose roots track the set of sources in their component."""

    def __init__(self, keys):
        self.parent = {k: k for k in keys}
        self.sources = {k: {k.source} for k in keys}

    def find(self, k):
        root = k
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[k] != root:
            self.parent[k], k = root, self.parent[k]
        return root

    def try_union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.sources[ra] & self.sources[rb]:
            return False
        if len(self.sources[ra]) < len(self.sources[rb]):
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.sources[ra] |= self.sources.pop(rb)
        return True


def build_clusters(sets: Sequence[AnnotationSet],
                   threshold: float = DEFAULT_THRESHOLD) -> list[Cluster]:
    """Partition all annotations of one image into source-unique clusters.

    ``sets`` must be in the dataset's declared source order: that order
    breaks ties between equal-distance pairs from different source pairs.
    Matches are merged greedily by ascending distance; a merge that would put
    two annotations of one source together is skipped.
    """
    _check_threshold(threshold)
    sources = [s.source for s in sets]
    if len(set(sources)) != len(sources):
        raise AssociationError(f"duplicate source among input sets: {sources}")
    image_ids = {s.image_id for s in sets}
    if len(image_ids) > 1:
        raise AssociationError(f"sets span several images: {sorted(image_ids)}")
    if not sets:
        return []
    image_id = sets[0].image_id

    candidates = []
    pair_rank = 0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            for m in pairwise_match(sets[i], sets[j], threshold):
                candidates.append((m.distance, pair_rank, m.a.index, m.b.index, m))
            pair_rank += 1
    candidates.sort(key=lambda c: c[:4])

    keys = [AnnRef(s.source, idx) for s in sets for idx in range(len(s))]
    uf = _SourceAwareUnionFind(keys)
    for *_, m in candidates:
        uf.try_union(m.a, m.b)

    rank = {s: n for n, s in enumerate(sources)}
    lookup = {s.source: s.annotations for s in sets}
    groups: dict[AnnRef, list[AnnRef]] = {}
    for k in keys:
        groups.setdefault(uf.find(k), []).append(k)
    clusters = []
    for members in groups.values():
        members.sort(key=lambda r: (rank[r.source], r.index))
        clusters.append(Cluster(
            image_id,
            tuple(members),
            tuple(lookup[r.source][r.index] for r in members),
        ))
    # groups preserves first-seen order of keys, which is (source order, index)
    return clusters
