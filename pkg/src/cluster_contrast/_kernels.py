"""Hot numeric kernels with numba-compiled and pure-numpy implementations.

Every kernel exists twice: a loop version compiled with ``numba.njit``
(``nogil`` so candidate scans parallelize across threads) and a vectorized
numpy fallback. Set ``CLUSTER_CONTRAST_NO_NUMBA=1`` to force the numpy path;
``benchmarks/bench_kernels.py`` compares the two.

Within a path all kernels are deterministic: identical inputs give
bit-identical outputs regardless of thread count.
"""

from __future__ import annotations

import math
import os

import numpy as np

_MAX_BINS = 10_000

_flag = os.environ.get("CLUSTER_CONTRAST_NO_NUMBA", "").strip().lower()
_numba_wanted = _flag not in ("1", "true", "yes")

if _numba_wanted:
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
        USING_NUMBA = False
else:
    USING_NUMBA = False


# ---------------------------------------------------------------------------
# Loop implementations (numba-compilable)
# ---------------------------------------------------------------------------

def _scott_bins_loop(values):
    # the bin-width rule runs on the set of distinct values
    uniq = np.unique(values)
    n = uniq.shape[0]
    lo = uniq[0]
    hi = uniq[n - 1]
    mean = 0.0
    for i in range(n):
        mean += uniq[i]
    mean /= n
    var = 0.0
    for i in range(n):
        d = uniq[i] - mean
        var += d * d
    var /= n
    sigma = math.sqrt(var)
    if sigma <= 0.0 or hi <= lo:
        return lo, 1.0, 1
    width = 3.49 * sigma * n ** (-1.0 / 3.0)
    if width <= 0.0:
        return lo, 1.0, 1
    nbins = int(math.ceil((hi - lo) / width))
    if nbins < 1:
        nbins = 1
    if nbins > _MAX_BINS:
        nbins = _MAX_BINS
        width = (hi - lo) / _MAX_BINS
    return lo, width, nbins


def _bin_counts_loop(values, start, width, nbins):
    counts = np.zeros(nbins, np.int64)
    for i in range(values.shape[0]):
        idx = int(math.floor((values[i] - start) / width))
        if idx < 0:
            idx = 0
        elif idx >= nbins:
            idx = nbins - 1
        counts[idx] += 1
    return counts


def _minmax_scaled_var_loop(values, lo, hi):
    n = values.shape[0]
    if hi <= lo or n == 0:
        return 0.0
    all_equal = True
    for i in range(1, n):
        if values[i] != values[0]:
            all_equal = False
            break
    if all_equal:
        return 0.0
    span = hi - lo
    mean = 0.0
    for i in range(n):
        mean += (values[i] - lo) / span
    mean /= n
    var = 0.0
    for i in range(n):
        d = (values[i] - lo) / span - mean
        var += d * d
    return var / n


def _top_eigvec_loop(m):
    w, v = np.linalg.eigh(m)
    lam = w[-1]
    vec = v[:, -1].copy()
    amax = -1.0
    idx = 0
    for i in range(vec.shape[0]):
        a = abs(vec[i])
        if a > amax:
            amax = a
            idx = i
    if vec[idx] < 0.0:
        vec = -vec
    return lam, vec


def _scan_candidate_loop(c_e, c_r, alpha, x0, mask):
    # scott_bins/bin_counts/minmax_scaled_var/_top_eigvec resolve to the jitted
    # dispatchers when this function is itself compiled.
    m = c_e - alpha * c_r
    lam, vec = _top_eigvec(m)
    proj = x0 @ vec
    lo = proj[0]
    hi = proj[0]
    for i in range(proj.shape[0]):
        if proj[i] < lo:
            lo = proj[i]
        if proj[i] > hi:
            hi = proj[i]
    start, width, nbins = scott_bins(proj)
    k_proj = proj[mask]
    r_proj = proj[~mask]
    counts_k = bin_counts(k_proj, start, width, nbins)
    counts_r = bin_counts(r_proj, start, width, nbins)
    inter = 0
    for j in range(nbins):
        if counts_k[j] < counts_r[j]:
            inter += counts_k[j]
        else:
            inter += counts_r[j]
    v_var = minmax_scaled_var(k_proj, lo, hi)
    return lam, vec, inter, v_var


def _dbscan_loop(coords, eps, min_pts):
    n = coords.shape[0]
    d = coords.shape[1]
    eps2 = eps * eps
    labels = np.full(n, -2, np.int64)
    neigh = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    cid = 0
    for seed in range(n):
        if labels[seed] != -2:
            continue
        cnt = 0
        for j in range(n):
            dist2 = 0.0
            for c in range(d):
                diff = coords[seed, c] - coords[j, c]
                dist2 += diff * diff
            if dist2 <= eps2:
                neigh[cnt] = j
                cnt += 1
        if cnt < min_pts:
            labels[seed] = -1
            continue
        labels[seed] = cid
        head = 0
        tail = 0
        for q in range(cnt):
            u = neigh[q]
            if labels[u] == -2:
                labels[u] = cid
                queue[tail] = u
                tail += 1
            elif labels[u] == -1:
                labels[u] = cid
        while head < tail:
            p = queue[head]
            head += 1
            pcnt = 0
            for j in range(n):
                dist2 = 0.0
                for c in range(d):
                    diff = coords[p, c] - coords[j, c]
                    dist2 += diff * diff
                if dist2 <= eps2:
                    neigh[pcnt] = j
                    pcnt += 1
            if pcnt < min_pts:
                continue
            for q in range(pcnt):
                u = neigh[q]
                if labels[u] == -2:
                    labels[u] = cid
                    queue[tail] = u
                    tail += 1
                elif labels[u] == -1:
                    labels[u] = cid
        cid += 1
    return labels


def _linkage_loop(dmat):
    n = dmat.shape[0]
    dist = dmat.copy()
    active = np.ones(n, np.bool_)
    min_leaf = np.arange(n)
    ids = np.arange(n)
    lefts = np.empty(n - 1, np.int64)
    rights = np.empty(n - 1, np.int64)
    heights = np.empty(n - 1, np.float64)
    for step in range(n - 1):
        best = np.inf
        bi = -1
        bj = -1
        ba = -1
        bb = -1
        for i in range(n):
            if not active[i]:
                continue
            for j in range(i + 1, n):
                if not active[j]:
                    continue
                dij = dist[i, j]
                a = min_leaf[i]
                b = min_leaf[j]
                if a > b:
                    a, b = b, a
                if dij < best or (dij == best and (a < ba or (a == ba and b < bb))):
                    best = dij
                    bi = i
                    bj = j
                    ba = a
                    bb = b
        if min_leaf[bi] <= min_leaf[bj]:
            lefts[step] = ids[bi]
            rights[step] = ids[bj]
        else:
            lefts[step] = ids[bj]
            rights[step] = ids[bi]
        heights[step] = best
        for k in range(n):
            if active[k] and k != bi and k != bj:
                dk = dist[bj, k]
                if dk > dist[bi, k]:
                    dist[bi, k] = dk
                    dist[k, bi] = dk
        active[bj] = False
        ids[bi] = n + step
        if min_leaf[bj] < min_leaf[bi]:
            min_leaf[bi] = min_leaf[bj]
    return lefts, rights, heights


# ---------------------------------------------------------------------------
# Pure-numpy implementations
# ---------------------------------------------------------------------------

def _scott_bins_np(values):
    uniq = np.unique(values)
    n = uniq.shape[0]
    lo = float(uniq[0])
    hi = float(uniq[-1])
    sigma = float(uniq.std())
    if sigma <= 0.0 or hi <= lo:
        return lo, 1.0, 1
    width = 3.49 * sigma * n ** (-1.0 / 3.0)
    if width <= 0.0:
        return lo, 1.0, 1
    nbins = int(math.ceil((hi - lo) / width))
    if nbins < 1:
        nbins = 1
    if nbins > _MAX_BINS:
        nbins = _MAX_BINS
        width = (hi - lo) / _MAX_BINS
    return lo, width, nbins


def _bin_counts_np(values, start, width, nbins):
    idx = np.floor((values - start) / width).astype(np.int64)
    np.clip(idx, 0, nbins - 1, out=idx)
    return np.bincount(idx, minlength=nbins).astype(np.int64)


def _minmax_scaled_var_np(values, lo, hi):
    if hi <= lo or values.shape[0] == 0:
        return 0.0
    if values.min() == values.max():
        return 0.0
    scaled = (values - lo) / (hi - lo)
    return float(scaled.var())


def _top_eigvec_np(m):
    w, v = np.linalg.eigh(m)
    lam = float(w[-1])
    vec = v[:, -1].copy()
    if vec[np.argmax(np.abs(vec))] < 0.0:
        vec = -vec
    return lam, vec


def _scan_candidate_np(c_e, c_r, alpha, x0, mask):
    m = c_e - alpha * c_r
    lam, vec = _top_eigvec_np(m)
    proj = x0 @ vec
    lo = float(proj.min())
    hi = float(proj.max())
    start, width, nbins = _scott_bins_np(proj)
    k_proj = proj[mask]
    r_proj = proj[~mask]
    counts_k = _bin_counts_np(k_proj, start, width, nbins)
    counts_r = _bin_counts_np(r_proj, start, width, nbins)
    inter = int(np.minimum(counts_k, counts_r).sum())
    v_var = _minmax_scaled_var_np(k_proj, lo, hi)
    return lam, vec, inter, v_var


def _dbscan_np(coords, eps, min_pts):
    n = coords.shape[0]
    eps2 = eps * eps
    labels = np.full(n, -2, np.int64)
    cid = 0

    def region(p):
        diff = coords - coords[p]
        dist2 = (diff * diff).sum(axis=1)
        return np.flatnonzero(dist2 <= eps2)

    for seed in range(n):
        if labels[seed] != -2:
            continue
        hood = region(seed)
        if hood.shape[0] < min_pts:
            labels[seed] = -1
            continue
        labels[seed] = cid
        queue = []
        for u in hood:
            if labels[u] == -2:
                labels[u] = cid
                queue.append(u)
            elif labels[u] == -1:
                labels[u] = cid
        head = 0
        while head < len(queue):
            p = queue[head]
            head += 1
            hood = region(p)
            if hood.shape[0] < min_pts:
                continue
            for u in hood:
                if labels[u] == -2:
                    labels[u] = cid
                    queue.append(u)
                elif labels[u] == -1:
                    labels[u] = cid
        cid += 1
    return labels


def _linkage_np(dmat):
    n = dmat.shape[0]
    dist = dmat.astype(np.float64, copy=True)
    np.fill_diagonal(dist, np.inf)
    alive = np.ones(n, np.bool_)
    min_leaf = np.arange(n)
    ids = np.arange(n)
    lefts = np.empty(n - 1, np.int64)
    rights = np.empty(n - 1, np.int64)
    heights = np.empty(n - 1, np.float64)
    masked = dist.copy()
    for step in range(n - 1):
        best = masked.min()
        cand = np.argwhere(masked == best)
        cand = cand[cand[:, 0] < cand[:, 1]]
        keys = np.sort(min_leaf[cand], axis=1)
        order = np.lexsort((keys[:, 1], keys[:, 0]))
        bi, bj = cand[order[0]]
        if min_leaf[bi] <= min_leaf[bj]:
            lefts[step], rights[step] = ids[bi], ids[bj]
        else:
            lefts[step], rights[step] = ids[bj], ids[bi]
        heights[step] = best
        merged = np.maximum(dist[bi], dist[bj])
        dist[bi, :] = merged
        dist[:, bi] = merged
        dist[bi, bi] = np.inf
        alive[bj] = False
        ids[bi] = n + step
        min_leaf[bi] = min(min_leaf[bi], min_leaf[bj])
        masked = dist.copy()
        masked[~alive, :] = np.inf
        masked[:, ~alive] = np.inf
    return lefts, rights, heights


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

if USING_NUMBA:
    _jit = njit(cache=True, nogil=True)
    scott_bins = _jit(_scott_bins_loop)
    bin_counts = _jit(_bin_counts_loop)
    minmax_scaled_var = _jit(_minmax_scaled_var_loop)
    _top_eigvec = _jit(_top_eigvec_loop)
    scan_candidate = _jit(_scan_candidate_loop)
    dbscan_labels = _jit(_dbscan_loop)
    linkage_merges = _jit(_linkage_loop)
else:
    scott_bins = _scott_bins_np
    bin_counts = _bin_counts_np
    minmax_scaled_var = _minmax_scaled_var_np
    _top_eigvec = _top_eigvec_np
    scan_candidate = _scan_candidate_np
    dbscan_labels = _dbscan_np
    linkage_merges = _linkage_np


def warmup() -> None:
    """Trigger JIT compilation so timed sections never pay compile cost."""
    rng = np.random.default_rng(0)
    x = rng.normal(size=(8, 3))
    c = np.ascontiguousarray(x.T @ x / 8.0)
    mask = np.zeros(8, np.bool_)
    mask[:3] = True
    scan_candidate(c, c, 0.5, np.ascontiguousarray(x), mask)
    scott_bins(x[:, 0].copy())
    bin_counts(x[:, 0].copy(), -3.0, 1.0, 6)
    minmax_scaled_var(x[:, 0].copy(), -3.0, 3.0)
    dbscan_labels(np.ascontiguousarray(x[:, :2]), 1.0, 2)
    dmat = np.abs(x[:, :1] - x[:, :1].T)
    linkage_merges(np.ascontiguousarray(dmat))
