"""Covariance, symmetric eigendecomposition, and the cluster-contrast fit.

The contrast fit takes the entire dataset as the target and the points
outside the chosen cluster as the background, with both covariances centered
on the whole dataset's mean. The top eigenvectors of ``C_E - alpha * C_R``
are the directions that expose what makes the cluster different.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import EmbeddedDataset

SYMMETRY_RTOL = 1e-8
EIGEN_TIE_TOL = 1e-10


class NumericalError(RuntimeError):
    """Raised when a numeric step cannot produce a meaningful result."""


@dataclass(frozen=True)
class CovMatrix:
    values: np.ndarray  # (d, d), symmetric
    mean: np.ndarray    # centroid that was subtracted
    count: int


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray  # unit norm


@dataclass
class ContrastResult:
    """Per-cluster contrast fit: eigenpairs of C_E - alpha * C_R plus loadings."""

    cluster_id: int
    alpha: float
    components: list[EigenPair]
    loadings: np.ndarray = field(default=None)  # type: ignore[assignment]

    def to_json_dict(self) -> dict:
        return {
            "cluster": int(self.cluster_id),
            "alpha": float(self.alpha),
            "eigenvalues": [p.value for p in self.components],
            "components": [p.vector.tolist() for p in self.components],
            "loadings": self.loadings.tolist(),
        }


def covariance(data, center=None) -> CovMatrix:
    """Empirical covariance with point-count denominator.

    Rows are centered on ``center`` when given, otherwise on the data's own
    mean. Using 1/n (not 1/(n-1)) keeps the whole/part covariance identity
    ``C_E = (t C_K + u C_R) / s`` exact for shared centers.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError("data must be a non-empty 2D matrix")
    n, d = x.shape
    if center is None:
        c = x.mean(axis=0)
    else:
        c = np.asarray(center, dtype=np.float64)
        if c.shape != (d,):
            raise ValueError("center length must equal the number of features")
    x0 = x - c
    cov = x0.T @ x0 / n
    cov = (cov + cov.T) / 2.0
    return CovMatrix(cov, c, n)


def contrast_matrix(c_target: CovMatrix, c_background: CovMatrix, alpha: float) -> np.ndarray:
    """Target covariance minus ``alpha`` times the background covariance."""
    if c_target.values.shape != c_background.values.shape:
        raise ValueError("covariance dimensions do not match")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    return c_target.values - alpha * c_background.values


def _orient(vec: np.ndarray) -> np.ndarray:
    """Flip so the largest-magnitude entry is positive (deterministic output)."""
    if vec[np.argmax(np.abs(vec))] < 0:
        return -vec
    return vec


def top_eigs(m, k: int) -> list[EigenPair]:
    """The k algebraically largest eigenpairs of a symmetric matrix, descending.

    The contrast matrix may be indefinite; "largest" means largest signed
    eigenvalue. Eigenvalues tied within ``EIGEN_TIE_TOL`` of the top are
    ordered by lexicographically descending oriented eigenvectors.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    d = m.shape[0]
    if not 1 <= k <= d:
        raise ValueError("k must lie in 1..d")
    scale = np.max(np.abs(m)) if m.size else 0.0
    if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * (1.0 + scale):
        raise ValueError("matrix is not symmetric within tolerance")
    m = (m + m.T) / 2.0
    w, v = np.linalg.eigh(m)
    order = np.argsort(w)[::-1]
    w = w[order]
    vecs = [_orient(v[:, i].copy()) for i in order]
    tied = 1
    while tied < d and w[0] - w[tied] <= EIGEN_TIE_TOL:
        tied += 1
    if tied > 1:
        perm = sorted(range(tied), key=lambda i: tuple(vecs[i]), reverse=True)
        w[:tied] = w[perm]
        vecs[:tied] = [vecs[i] for i in perm]
    return [EigenPair(float(w[i]), vecs[i]) for i in range(k)]


def cluster_split(dataset: EmbeddedDataset, cluster_id: int):
    """Boolean mask of the target cluster; raises if the split is degenerate."""
    if dataset.labels is None:
        raise ValueError("dataset has no cluster labels")
    mask = dataset.labels == cluster_id
    if not mask.any():
        raise ValueError("unknown or empty cluster %r" % cluster_id)
    if mask.all():
        raise ValueError("cluster %r covers the whole dataset; complement is empty" % cluster_id)
    return mask


def contrast_inputs(dataset: EmbeddedDataset, cluster_id: int):
    """(C_E, C_R, E-centered data, cluster mask) shared by fits and scans."""
    mask = cluster_split(dataset, cluster_id)
    x = dataset.table.points
    if dataset.table.missing_mask.any():
        raise ValueError("impute missing values before fitting")
    mean_e = x.mean(axis=0)
    c_e = covariance(x, mean_e)
    c_r = covariance(x[~mask], mean_e)
    x0 = np.ascontiguousarray(x - mean_e)
    return c_e, c_r, x0, mask


def ccpca_fit(dataset: EmbeddedDataset, cluster_id: int, alpha: float) -> ContrastResult:
    """Contrast the whole dataset against the complement of one cluster.

    Both covariances are centered on the entire dataset's mean: the
    complement is deliberately *not* centered on its own mean, so the first
    component is the direction of maximum whole-data variance that the
    complement cannot explain.
    """
    from .contributions import loadings  # circular at module level

    c_e, c_r, _, _ = contrast_inputs(dataset, cluster_id)
    m = contrast_matrix(c_e, c_r, alpha)
    k = min(2, dataset.table.n_features)
    components = top_eigs(m, k)
    return ContrastResult(
        cluster_id=int(cluster_id),
        alpha=float(alpha),
        components=components,
        loadings=loadings(components[0]),
    )


def project(data, components: list[EigenPair], center) -> np.ndarray:
    """Dot the centered rows with each component vector (rows x k scores)."""
    x = np.asarray(data, dtype=np.float64)
    c = np.asarray(center, dtype=np.float64)
    w = np.column_stack([p.vector for p in components])
    if x.shape[1] != w.shape[0] or c.shape != (x.shape[1],):
        raise ValueError("component/center length must equal the number of features")
    return (x - c) @ w
