"""Cluster fusion by source preference, consensus sets and the confident/ambiguous split."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from . import policy as _policy
from .assoc import AnnRef, Cluster
from .policy import ConsensusPolicy

DEFAULT_ORDER = ("S", "L", "M")


class FusionError(ValueError):
    pass


@dataclass(frozen=True)
class FusedAnnotation:
    image_id: str
    u: float
    v: float
    chosen_source: str
    contributing_sources: tuple[str, ...]
    members: tuple[AnnRef, ...]

    @property
    def consensus_degree(self) -> int:
        return len(self.contributing_sources)


@dataclass(frozen=True)
class LabelSplit:
    image_id: str
    confident: tuple[FusedAnnotation, ...]
    ambiguous: tuple[FusedAnnotation, ...]


def fuse_cluster(cluster: Cluster, order: Sequence[str]) -> FusedAnnotation:
    """Copy the position of the member whose source ranks highest in ``order``."""
    if not cluster.refs:
        raise FusionError("cannot fuse an empty cluster")
    rank = {s: i for i, s in enumerate(order)}
    missing = sorted(cluster.sources - rank.keys())
    if missing:
        raise FusionError(f"source(s) {missing} absent from preference order {list(order)}")
    best = min(range(len(cluster.refs)), key=lambda i: rank[cluster.refs[i].source])
    chosen = cluster.members[best]
    return FusedAnnotation(
        image_id=cluster.image_id,
        u=chosen.u,
        v=chosen.v,
        chosen_source=cluster.refs[best].source,
        contributing_sources=tuple(r.source for r in cluster.refs),
        members=cluster.refs,
    )


def eval_policy(cluster: Cluster, policy: ConsensusPolicy | str) -> bool:
    if isinstance(policy, str):
        policy = _policy.parse_policy(policy)
    return _policy.evaluate(policy.root, cluster.sources)


def consensus_set(clusters: Sequence[Cluster], q: int, order: Sequence[str],
                  n_sources: Optional[int] = None) -> list[FusedAnnotation]:
    """Fused annotations of the clusters holding at least ``q`` sources.

    ``n_sources`` is K, the number of dataset sources; it defaults to the
    length of ``order``.
    """
    k = len(order) if n_sources is None else n_sources
    if not 1 <= q <= k:
        raise FusionError(f"consensus degree q={q} outside 1..{k}")
    return [fuse_cluster(c, order) for c in clusters if len(c) >= q]


def split_labels(clusters: Sequence[Cluster], policy: ConsensusPolicy | str,
                 order: Sequence[str], image_id: Optional[str] = None) -> LabelSplit:
    """Confident labels (policy holds) and ambiguous ones (every other cluster)."""
    if isinstance(policy, str):
        policy = _policy.parse_policy(policy)
    if image_id is None:
        image_id = clusters[0].image_id if clusters else ""
    confident, ambiguous = [], []
    for c in clusters:
        fused = fuse_cluster(c, order)
        (confident if _policy.evaluate(policy.root, c.sources) else ambiguous).append(fused)
    return LabelSplit(image_id, tuple(confident), tuple(ambiguous))
