"""Cluster-contrast analysis for 2D embeddings of high-dimensional data.

Given a dataset, its 2D embedding, and cluster labels (found by DBSCAN or
drawn by hand), the engine contrasts each cluster against the rest of the
data, extracts per-feature contributions from the leading contrastive
component, and organizes them into a sign-consistent, seriated, optionally
aggregated features-by-clusters matrix.
"""

__version__ = "0.1.0"

from ._kernels import USING_NUMBA
from .alpha import (
    AlphaGrid,
    AlphaScan,
    alpha_grid,
    discrepancy,
    histogram_intersection,
    scaled_variance,
    select_alpha,
    shared_bins,
)
from .clustering import ClusterParams, add_manual_cluster, dbscan
from .contributions import (
    FCMatrix,
    build_fc_matrix,
    loadings,
    optimize_signs,
    scale_column,
    sign_objective,
)
from .cpca import (
    ContrastResult,
    CovMatrix,
    EigenPair,
    NumericalError,
    ccpca_fit,
    contrast_matrix,
    covariance,
    project,
    top_eigs,
)
from .dataset import (
    DataTable,
    DatasetError,
    EmbeddedDataset,
    filter_missing,
    impute_mean,
    load_bundle,
    load_table,
    save_bundle,
)
from .layout import Dendrogram, LayoutResult, layout, linkage_complete, optimal_leaf_order
from .pipeline import AnalysisParams, AnalysisResult, analyze

__all__ = [
    "USING_NUMBA",
    "AlphaGrid",
    "AlphaScan",
    "AnalysisParams",
    "AnalysisResult",
    "ClusterParams",
    "ContrastResult",
    "CovMatrix",
    "DataTable",
    "DatasetError",
    "Dendrogram",
    "EigenPair",
    "EmbeddedDataset",
    "FCMatrix",
    "LayoutResult",
    "NumericalError",
    "add_manual_cluster",
    "alpha_grid",
    "analyze",
    "build_fc_matrix",
    "ccpca_fit",
    "contrast_matrix",
    "covariance",
    "dbscan",
    "discrepancy",
    "filter_missing",
    "histogram_intersection",
    "impute_mean",
    "layout",
    "linkage_complete",
    "load_bundle",
    "load_table",
    "loadings",
    "optimal_leaf_order",
    "optimize_signs",
    "project",
    "save_bundle",
    "scale_column",
    "scaled_variance",
    "select_alpha",
    "shared_bins",
    "sign_objective",
    "top_eigs",
]
