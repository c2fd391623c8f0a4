"""Density-based cluster identification in the 2D embedding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dataset import EmbeddedDataset, _compact_labels


@dataclass(frozen=True)
class ClusterParams:
    eps: float
    min_pts: int

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be at least 1")


def dbscan(coords, params: ClusterParams) -> np.ndarray:
    """Standard DBSCAN over the embedding; -1 marks noise.

    A core point has at least ``min_pts`` points (itself included) within
    ``eps``. Clusters are numbered 0..l-1 in discovery order; border points
    join the first core cluster that reaches them, with seeds and neighbor
    expansion both visited in ascending point index, so the labeling is
    deterministic.
    """
    coords = np.ascontiguousarray(np.asarray(coords, dtype=np.float64))
    if coords.ndim != 2 or coords.shape[0] < 1:
        raise ValueError("coords must be a non-empty 2D array")
    return _kernels.dbscan_labels(coords, float(params.eps), int(params.min_pts))


def add_manual_cluster(dataset: EmbeddedDataset, point_indices) -> EmbeddedDataset:
    """Move the selected points into a fresh cluster.

    Previous labels of the selected points are overwritten; if that empties
    a cluster, the remaining labels are compacted back to 0..l-1 (relative
    order preserved, the new cluster last).
    """
    indices = sorted(set(int(i) for i in point_indices))
    if not indices:
        raise ValueError("empty selection")
    n = dataset.table.n_points
    if indices[0] < 0 or indices[-1] >= n:
        raise ValueError("point index out of range")
    labels = (
        np.full(n, -1, dtype=np.int64)
        if dataset.labels is None
        else dataset.labels.copy()
    )
    fresh = int(labels.max()) + 1 if (labels >= 0).any() else 0
    labels[indices] = fresh
    return dataset.with_labels(_compact_labels(labels))
