"""End-to-end analysis shared by the batch CLI and the session service."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import alpha as alpha_mod
from .alpha import AlphaScan, alpha_grid, select_alpha
from .clustering import ClusterParams, dbscan
from .contributions import FCMatrix, build_fc_matrix
from .cpca import ContrastResult, ccpca_fit
from .dataset import DatasetError, EmbeddedDataset, filter_dataset, impute_mean
from .layout import LayoutResult, layout


@dataclass
class AnalysisParams:
    eps: float | None = None
    min_pts: int | None = None
    gamma: float = alpha_mod.DEFAULT_GAMMA
    q: int = alpha_mod.DEFAULT_Q
    alpha_min: float = alpha_mod.DEFAULT_ALPHA_MIN
    alpha_max: float = alpha_mod.DEFAULT_ALPHA_MAX
    delta: int = 40
    agg_mode: str = "max_abs"
    top_k: int = 3
    threads: int = 1
    filter_features: float | None = None
    filter_points: float | None = None


@dataclass
class AnalysisResult:
    dataset: EmbeddedDataset
    scans: dict[int, AlphaScan]
    fits: dict[int, ContrastResult]
    fc_matrix: FCMatrix
    layout: LayoutResult
    params: AnalysisParams = field(default_factory=AnalysisParams)

    def top_features(self, cluster_id: int, k: int | None = None) -> list[dict]:
        """Features ranked by absolute contribution, ties by feature index."""
        k = self.params.top_k if k is None else k
        col = self.fc_matrix.cluster_ids.index(cluster_id)
        values = self.fc_matrix.values[:, col]
        order = sorted(range(len(values)), key=lambda j: (-abs(values[j]), j))
        return [
            {"feature": self.fc_matrix.feature_names[j], "index": j, "fc": float(values[j])}
            for j in order[:k]
        ]

    def to_json_dict(self) -> dict:
        clusters = {}
        for cid in self.fc_matrix.cluster_ids:
            scan = self.scans[cid]
            clusters[_cluster_key(cid)] = {
                "alpha_scan": scan.to_json_dict(),
                "contrast": self.fits[cid].to_json_dict(),
                "top_features": self.top_features(cid),
            }
        return {
            "n_points": self.dataset.table.n_points,
            "n_features": self.dataset.table.n_features,
            "features": list(self.dataset.table.feature_names),
            "labels": [] if self.dataset.labels is None else self.dataset.labels.tolist(),
            "clusters": clusters,
            "fc_matrix": self.fc_matrix.to_json_dict(),
            "layout": self.layout.to_json_dict(),
        }


def _cluster_key(cid: int) -> str:
    return "Z" if cid == -1 else str(int(cid))


def prepare(dataset: EmbeddedDataset, params: AnalysisParams) -> EmbeddedDataset:
    """Filtering, imputation, and clustering up to a labeled dataset."""
    if params.filter_features is not None or params.filter_points is not None:
        dataset = filter_dataset(
            dataset,
            1.0 if params.filter_features is None else params.filter_features,
            1.0 if params.filter_points is None else params.filter_points,
        )
    if dataset.table.missing_mask.any():
        dataset = EmbeddedDataset(
            impute_mean(dataset.table), dataset.coords2d, dataset.labels
        )
    if dataset.labels is None:
        if params.eps is None or params.min_pts is None:
            raise DatasetError(
                "bundle has no labels; clustering parameters (eps, min_pts) required"
            )
        if dataset.coords2d is None:
            raise DatasetError("bundle has neither labels nor a 2D embedding")
        labels = dbscan(dataset.coords2d, ClusterParams(params.eps, params.min_pts))
        dataset = dataset.with_labels(labels)
    return dataset


def analyze_clusters(
    dataset: EmbeddedDataset, params: AnalysisParams
) -> tuple[dict[int, AlphaScan], dict[int, ContrastResult], FCMatrix, LayoutResult]:
    """Per-cluster contrast scan and fit, then the organized FC matrix."""
    cluster_ids = dataset.cluster_ids
    if not cluster_ids:
        raise DatasetError("no clusters to analyze")
    grid = alpha_grid(params.q, params.alpha_min, params.alpha_max)
    scans: dict[int, AlphaScan] = {}
    fits: dict[int, ContrastResult] = {}
    for cid in cluster_ids:
        scan = select_alpha(
            dataset, cid, grid=grid, gamma=params.gamma, threads=params.threads
        )
        scans[cid] = scan
        fits[cid] = ccpca_fit(dataset, cid, scan.chosen_alpha)
    fc = build_fc_matrix(
        [fits[cid] for cid in cluster_ids], dataset.table.feature_names
    )
    lay = layout(fc, delta=params.delta, agg_mode=params.agg_mode)
    return scans, fits, fc, lay


def analyze(dataset: EmbeddedDataset, params: AnalysisParams | None = None) -> AnalysisResult:
    params = params or AnalysisParams()
    dataset = prepare(dataset, params)
    scans, fits, fc, lay = analyze_clusters(dataset, params)
    return AnalysisResult(dataset, scans, fits, fc, lay, params)
