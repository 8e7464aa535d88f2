"""Multi-source pointwise annotation fusion for pole-base detection."""

__version__ = "0.1.0"

from .assoc import Cluster, build_clusters, pairwise_match
from .fusion import FusedAnnotation, LabelSplit, consensus_set, eval_policy, fuse_cluster, split_labels
from .model import AnnotationSet, Dataset, ImageRecord, PointAnnotation, load_dataset, save_dataset
from .policy import bind_policy, parse_policy

__all__ = [
    "AnnotationSet", "Cluster", "Dataset", "FusedAnnotation", "ImageRecord", "LabelSplit",
    "PointAnnotation", "bind_policy", "build_clusters", "consensus_set", "eval_policy",
    "fuse_cluster", "load_dataset", "pairwise_match", "parse_policy", "save_dataset",
    "split_labels",
]
