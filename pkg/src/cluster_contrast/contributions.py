"""Feature contributions: loadings, per-cluster scaling, and sign resolution.

Eigenvectors are only defined up to sign, so clusters whose first components
point in opposite directions would show artificially inverted contribution
columns. Signs are re-resolved jointly by maximizing the sum of pairwise
cosine similarities over sign assignments (a cheap greedy heuristic).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cpca import ContrastResult, EigenPair, NumericalError


@dataclass
class FCMatrix:
    """Features-by-clusters contribution matrix, each column scaled to [-1, 1]."""

    values: np.ndarray  # (d, l)
    feature_names: list[str]
    cluster_ids: list[int]
    signs: np.ndarray  # (l,) entries in {-1, +1}

    def to_json_dict(self) -> dict:
        return {
            "features": list(self.feature_names),
            "clusters": [int(c) for c in self.cluster_ids],
            "values": [self.values[:, j].tolist() for j in range(self.values.shape[1])],
            "signs": [int(s) for s in self.signs],
        }


def loadings(pair: EigenPair) -> np.ndarray:
    """Scale the unit eigenvector by the square root of its eigenvalue."""
    if pair.value < 0:
        raise NumericalError(
            "no variance-positive contrastive direction (top eigenvalue %g < 0; "
            "alpha is too large)" % pair.value
        )
    return np.sqrt(pair.value) * pair.vector


def scale_column(w) -> np.ndarray:
    """Divide by the maximum absolute entry; all-zero stays all-zero."""
    w = np.asarray(w, dtype=np.float64)
    peak = np.max(np.abs(w)) if w.size else 0.0
    if peak == 0.0:
        return np.zeros_like(w)
    return w / peak


def _cosine_matrix(dirs: list[np.ndarray]) -> np.ndarray:
    """Pairwise cosines; zero-norm directions get similarity 0 everywhere."""
    if not dirs:
        return np.zeros((0, 0))
    d = dirs[0].shape[0]
    if d == 0:
        raise ValueError("direction vectors must have at least one entry")
    if any(v.shape != (d,) for v in dirs):
        raise ValueError("direction vectors must share one length")
    stacked = np.vstack(dirs)
    norms = np.linalg.norm(stacked, axis=1)
    safe = np.where(norms == 0, 1.0, norms)
    unit = stacked / safe[:, None]
    sim = unit @ unit.T
    sim[norms == 0, :] = 0.0
    sim[:, norms == 0] = 0.0
    np.fill_diagonal(sim, 0.0)
    return sim


def sign_objective(dirs: list[np.ndarray], phi) -> float:
    """Sum over ordered pairs i != j of phi_i * phi_j * cos(dir_i, dir_j)."""
    phi = np.asarray(phi, dtype=np.float64)
    if set(np.unique(phi)) - {-1.0, 1.0}:
        raise ValueError("signs must be -1 or +1")
    sim = _cosine_matrix([np.asarray(v, float) for v in dirs])
    return float(phi @ sim @ phi)


def optimize_signs(dirs: list[np.ndarray]) -> np.ndarray:
    """Greedy sign resolution: repeatedly flip the cluster with the most
    negative similarity row-sum while that strictly improves the objective.

    Each cluster is checked at most once; row-sums are recomputed after
    every accepted flip, so every flip strictly increases the objective and
    the loop always terminates.
    """
    l = len(dirs)
    if l == 0:
        raise ValueError("need at least one direction")
    sim = _cosine_matrix([np.asarray(v, float) for v in dirs])
    phi = np.ones(l)
    checked = np.zeros(l, dtype=bool)
    while True:
        rows = phi * (sim @ phi)
        if (rows >= 0).all():
            break
        open_rows = np.where(checked, np.inf, rows)
        i = int(np.argmin(open_rows))
        if np.isinf(open_rows[i]):
            break  # every cluster has been checked
        checked[i] = True
        if rows[i] < 0:  # flipping i changes the objective by -4 * rows[i]
            phi[i] = -phi[i]
    return phi.astype(np.int64)


def build_fc_matrix(
    results: list[ContrastResult], feature_names: list[str] | None = None
) -> FCMatrix:
    """Sign-resolve the clusters' first components, apply the signs to the
    loadings, and scale each column to [-1, 1]. Column order follows the
    input order (cluster id order in the pipeline, noise last)."""
    if not results:
        raise ValueError("need at least one contrast result")
    d = results[0].loadings.shape[0]
    for r in results:
        if r.loadings.shape[0] != d:
            raise ValueError("contrast results disagree on the number of features")
    if feature_names is None:
        feature_names = ["f%d" % j for j in range(d)]
    if len(feature_names) != d:
        raise ValueError("feature_names length must equal the number of features")
    dirs = [r.components[0].vector for r in results]
    phi = optimize_signs(dirs)
    columns = [scale_column(phi[i] * results[i].loadings) for i in range(len(results))]
    return FCMatrix(
        values=np.column_stack(columns),
        feature_names=list(feature_names),
        cluster_ids=[r.cluster_id for r in results],
        signs=phi,
    )
