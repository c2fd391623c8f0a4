"""Heatmap organization: seriation of rows/columns and row aggregation.

Rows (features) and columns (clusters) are each clustered with
complete-linkage agglomeration and then reordered by optimal leaf ordering,
which picks the dendrogram subtree orientations minimizing the sum of
distances between adjacent leaves. When there are more features than the
display threshold, the row dendrogram is cut into that many groups and each
group collapses to one representative row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .contributions import FCMatrix


@dataclass(frozen=True)
class Dendrogram:
    """Agglomeration record: leaves 0..n-1, merge k creates node n+k."""

    n_leaves: int
    merges: list[tuple[int, int, float]]  # (left child, right child, height)


@dataclass(frozen=True)
class AggGroup:
    members: list[int]          # feature indices in display order
    representative: int         # feature index that names the group
    label: str
    values: np.ndarray          # aggregated value per cluster


@dataclass
class LayoutResult:
    row_perm: np.ndarray
    col_perm: np.ndarray
    row_dendrogram: Dendrogram
    col_dendrogram: Dendrogram
    groups: list[AggGroup]

    def to_json_dict(self) -> dict:
        return {
            "row_order": [int(i) for i in self.row_perm],
            "col_order": [int(j) for j in self.col_perm],
            "groups": [
                {
                    "members": [int(m) for m in g.members],
                    "label": g.label,
                    "values": g.values.tolist(),
                }
                for g in self.groups
            ],
        }


def pairwise_euclidean(vectors: np.ndarray) -> np.ndarray:
    diff = vectors[:, None, :] - vectors[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def linkage_complete(vectors, metric: str = "euclidean") -> Dendrogram:
    """Agglomerative clustering with max-pairwise inter-cluster distance.

    Ties on merge distance break toward the pair with the smallest leaf
    indices, so the dendrogram is deterministic.
    """
    if metric != "euclidean":
        raise ValueError("only the euclidean metric is supported")
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] < 1:
        raise ValueError("need at least one vector")
    n = v.shape[0]
    if n == 1:
        return Dendrogram(1, [])
    dmat = np.ascontiguousarray(pairwise_euclidean(v))
    lefts, rights, heights = _kernels.linkage_merges(dmat)
    merges = [
        (int(lefts[k]), int(rights[k]), float(heights[k])) for k in range(n - 1)
    ]
    return Dendrogram(n, merges)


def _children(dend: Dendrogram) -> dict[int, tuple[int, int]]:
    n = dend.n_leaves
    return {n + k: (a, b) for k, (a, b, _h) in enumerate(dend.merges)}


def _subtree_leaves(dend: Dendrogram) -> dict[int, np.ndarray]:
    """Leaf ids (ascending) under every node."""
    leaves = {i: np.array([i]) for i in range(dend.n_leaves)}
    for k, (a, b, _h) in enumerate(dend.merges):
        leaves[dend.n_leaves + k] = np.sort(np.concatenate([leaves[a], leaves[b]]))
    return leaves


def optimal_leaf_order(dend: Dendrogram, dist) -> np.ndarray:
    """Bar-Joseph dynamic program over all subtree flips.

    Returns the leaf permutation minimizing the sum of distances between
    adjacent leaves among all orders consistent with the dendrogram. The
    start leaf (and each internal split) resolves ties toward the smallest
    leaf index, so the output is deterministic.
    """
    dist = np.asarray(dist, dtype=np.float64)
    n = dend.n_leaves
    if dist.shape != (n, n):
        raise ValueError("distance matrix shape must match the leaf count")
    if n == 1:
        return np.array([0])
    children = _children(dend)
    leaves = _subtree_leaves(dend)
    root = n + len(dend.merges) - 1

    # cost[v][i, j]: cheapest order of v's leaves starting at leaves[v][i]
    # and ending at leaves[v][j]; infeasible pairs are +inf.
    cost: dict[int, np.ndarray] = {i: np.zeros((1, 1)) for i in range(n)}
    for k, (a, b, _h) in enumerate(dend.merges):
        v = n + k
        la, lb = leaves[a], leaves[b]
        ca, cb = cost[a], cost[b]
        d_ab = dist[np.ix_(la, lb)]
        # start in a, end in b: min over m in a, k in b
        t = (ca[:, :, None] + d_ab[None, :, :]).min(axis=1)          # (|a|, |b|)
        u = (t[:, :, None] + cb[None, :, :]).min(axis=1)             # (|a|, |b|)
        full = np.full((la.size + lb.size, la.size + lb.size), np.inf)
        pos = {leaf: idx for idx, leaf in enumerate(leaves[v])}
        ia = [pos[x] for x in la]
        ib = [pos[x] for x in lb]
        full[np.ix_(ia, ib)] = u
        full[np.ix_(ib, ia)] = u.T
        cost[v] = full

    flat = np.argmin(cost[root])
    l_idx, r_idx = divmod(int(flat), cost[root].shape[1])

    def rebuild(v: int, li: int, ri: int) -> list[int]:
        """Order of v's leaves from leaves[v][li] to leaves[v][ri].

        The cost table only stores sums associated as in the forward
        (start-in-left-child) direction, so a right-child start is rebuilt
        as the reversed forward path to keep float comparisons exact.
        """
        if v < n:
            return [v]
        a, b = children[v]
        la, lb = leaves[a], leaves[b]
        lv = leaves[v]
        start, end = lv[li], lv[ri]
        in_a = set(la.tolist())
        if int(start) in in_a:
            s, e = start, end
        else:
            s, e = end, start
        ca, cb = cost[a], cost[b]
        d_ab = dist[np.ix_(la, lb)]
        si = int(np.where(la == s)[0][0])
        ei = int(np.where(lb == e)[0][0])
        total = (ca[si][:, None] + d_ab) + cb[:, ei][None, :]
        m, k = np.argwhere(total == cost[v][li, ri])[0]
        forward = rebuild(a, si, int(m)) + rebuild(b, int(k), ei)
        return forward if int(start) in in_a else forward[::-1]

    return np.array(rebuild(root, l_idx, r_idx))


def cut_into_groups(dend: Dendrogram, k: int) -> list[list[int]]:
    """Undo the top k-1 merges, leaving exactly min(k, n) leaf groups."""
    n = dend.n_leaves
    k = min(k, n)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    leaves = _subtree_leaves(dend)
    applied = n - k
    for idx in range(applied):
        a, b, _h = dend.merges[idx]
        ra = find(int(leaves[a][0]))
        rb = find(int(leaves[b][0]))
        parent[rb] = ra
    groups: dict[int, list[int]] = {}
    for leaf in range(n):
        groups.setdefault(find(leaf), []).append(leaf)
    return [sorted(g) for g in sorted(groups.values(), key=lambda g: g[0])]


def _aggregate(values: np.ndarray, mode: str) -> np.ndarray:
    """Collapse a (members x clusters) block to one row per cluster."""
    if mode == "mean":
        return values.mean(axis=0)
    if mode == "max_abs":
        out = np.empty(values.shape[1])
        for j in range(values.shape[1]):
            col = values[:, j]
            best = col[0]
            for v in col[1:]:
                if abs(v) > abs(best) or (abs(v) == abs(best) and v > best):
                    best = v
            out[j] = best
        return out
    raise ValueError("unknown aggregation mode %r" % mode)


def layout(fc: FCMatrix, delta: int = 40, agg_mode: str = "max_abs") -> LayoutResult:
    """Reorder the contribution matrix and aggregate rows past the threshold.

    Rows cluster on their per-cluster contribution vectors and columns on
    their per-feature vectors, both reordered by optimal leaf ordering.
    With more than ``delta`` features the row dendrogram is cut into
    ``delta`` groups; each group takes its per-cluster value by ``agg_mode``
    (``max_abs`` keeps the signed entry of largest magnitude) and is named
    after the member holding the largest absolute contribution, labelled
    "<name>, k more" when k other features fold into it.
    """
    if delta < 1:
        raise ValueError("delta must be at least 1")
    d, _l = fc.values.shape
    rows = fc.values
    cols = fc.values.T

    row_dend = linkage_complete(rows)
    row_dist = pairwise_euclidean(rows)
    row_perm = optimal_leaf_order(row_dend, row_dist)
    col_dend = linkage_complete(cols)
    col_dist = pairwise_euclidean(cols)
    col_perm = optimal_leaf_order(col_dend, col_dist)

    raw_groups = cut_into_groups(row_dend, delta) if d > delta else [[j] for j in range(d)]
    position = {int(f): i for i, f in enumerate(row_perm)}
    ordered = sorted(raw_groups, key=lambda g: min(position[m] for m in g))

    groups = []
    for members in ordered:
        block = fc.values[members, :]
        peaks = np.max(np.abs(block), axis=1)
        rep = members[int(np.argmax(peaks))]
        name = fc.feature_names[rep]
        label = name if len(members) == 1 else "%s, %d more" % (name, len(members) - 1)
        groups.append(
            AggGroup(
                members=sorted(members, key=lambda m: position[m]),
                representative=rep,
                label=label,
                values=_aggregate(block, agg_mode),
            )
        )
    return LayoutResult(row_perm, col_perm, row_dend, col_dend, groups)
