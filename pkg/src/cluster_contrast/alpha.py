"""Automatic selection of the contrast parameter.

For every candidate alpha the cluster and its complement are projected onto
the first contrastive component; separation is scored by the inverse
histogram intersection (discrepancy D) and spread by the min-max-scaled
variance of the cluster's projection (V). The chosen alpha maximizes D
subject to V staying above a fraction gamma of the alpha=0 variance.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .cpca import EigenPair, contrast_inputs
from .dataset import EmbeddedDataset

DEFAULT_Q = 40
DEFAULT_ALPHA_MIN = 0.1
DEFAULT_ALPHA_MAX = 1000.0
DEFAULT_GAMMA = 0.5


@dataclass(frozen=True)
class AlphaGrid:
    """0 followed by q-1 logarithmically spaced candidates in [log_min, log_max]."""

    values: np.ndarray
    log_min: float
    log_max: float


@dataclass(frozen=True)
class Histogram:
    """Fixed-width bins; bin j covers [start + j*w, start + (j+1)*w), with the
    final bin closed on the right so the maximum lands inside."""

    bin_start: float
    bin_width: float
    counts: np.ndarray


@dataclass(frozen=True)
class AlphaCandidate:
    alpha: float
    discrepancy: float  # may be math.inf when the histograms are disjoint
    variance: float
    eigenpair: EigenPair


@dataclass
class AlphaScan:
    gamma: float
    candidates: list[AlphaCandidate]
    chosen_index: int
    fallback: bool = False

    @property
    def chosen(self) -> AlphaCandidate:
        return self.candidates[self.chosen_index]

    @property
    def chosen_alpha(self) -> float:
        return self.candidates[self.chosen_index].alpha

    def to_json_dict(self) -> dict:
        return {
            "gamma": float(self.gamma),
            "candidates": [
                {
                    "alpha": c.alpha,
                    "D": "inf" if math.isinf(c.discrepancy) else c.discrepancy,
                    "V": c.variance,
                }
                for c in self.candidates
            ],
            "chosen_alpha": self.chosen_alpha,
            "fallback": self.fallback,
        }


def alpha_grid(
    q: int = DEFAULT_Q,
    alpha_min: float = DEFAULT_ALPHA_MIN,
    alpha_max: float = DEFAULT_ALPHA_MAX,
) -> AlphaGrid:
    if q < 2:
        raise ValueError("need at least two candidates (0 plus one positive)")
    if not 0 < alpha_min < alpha_max:
        raise ValueError("require 0 < alpha_min < alpha_max")
    if q == 2:
        spaced = np.array([alpha_max])  # a single positive candidate sits at the top
    else:
        spaced = np.logspace(math.log10(alpha_min), math.log10(alpha_max), q - 1)
    values = np.concatenate(([0.0], spaced))
    if not (np.diff(values) > 0).all():
        raise ValueError("grid values are not strictly ascending")
    return AlphaGrid(values, math.log10(alpha_min), math.log10(alpha_max))


def shared_bins(a, b) -> tuple[float, float, int]:
    """Scott's-rule bins over the union of both samples.

    Width is 3.49 * sigma * N^(-1/3) over the set of N distinct combined
    values (duplicates count once, so identical samples get the same bins
    as either alone); both histograms must be built on these same bins.
    Degenerate spread collapses to a single bin, and the bin count is
    capped at 10,000 (the width widens to keep covering the range).
    """
    combined = np.concatenate([np.asarray(a, float).ravel(), np.asarray(b, float).ravel()])
    if combined.size == 0:
        raise ValueError("cannot bin an empty sample")
    return _kernels.scott_bins(combined)


def histogram(values, bins: tuple[float, float, int]) -> Histogram:
    start, width, count = bins
    v = np.ascontiguousarray(np.asarray(values, float).ravel())
    return Histogram(start, width, _kernels.bin_counts(v, start, width, count))


def histogram_intersection(a, b) -> int:
    """Sum over shared bins of the smaller of the two counts."""
    bins = shared_bins(a, b)
    ha = histogram(a, bins)
    hb = histogram(b, bins)
    return int(np.minimum(ha.counts, hb.counts).sum())


def discrepancy(k_proj, r_proj) -> float:
    """Inverse histogram intersection; +inf when the histograms are disjoint."""
    inter = histogram_intersection(k_proj, r_proj)
    return math.inf if inter == 0 else 1.0 / inter


def scaled_variance(k_proj, r_proj) -> float:
    """Population variance of the cluster projection after min-max scaling
    by the union's range."""
    k = np.ascontiguousarray(np.asarray(k_proj, float).ravel())
    r = np.asarray(r_proj, float).ravel()
    if k.size == 0:
        return 0.0
    lo = min(k.min(), r.min()) if r.size else k.min()
    hi = max(k.max(), r.max()) if r.size else k.max()
    return float(_kernels.minmax_scaled_var(k, float(lo), float(hi)))


def _candidate(c_e, c_r, alpha, x0, mask) -> AlphaCandidate:
    lam, vec, inter, v_var = _kernels.scan_candidate(
        c_e.values, c_r.values, float(alpha), x0, mask
    )
    d_score = math.inf if inter == 0 else 1.0 / inter
    return AlphaCandidate(float(alpha), d_score, float(v_var), EigenPair(float(lam), vec))


def select_alpha(
    dataset: EmbeddedDataset,
    cluster_id: int,
    grid: AlphaGrid | None = None,
    gamma: float = DEFAULT_GAMMA,
    threads: int = 1,
) -> AlphaScan:
    """Scan the candidate grid and apply the argmax-D, V-constrained rule.

    Candidates are independent, so the scan may run on a thread pool;
    results are gathered by index and the selection is single-threaded,
    which makes serial and parallel scans bit-identical. Equal best scores
    go to the smallest alpha. If no candidate is feasible (possible only
    for gamma > 1) the scan falls back to alpha = 0 and sets a flag.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if grid is None:
        grid = alpha_grid()
    if grid.values[0] != 0.0:
        raise ValueError("the candidate grid must start at alpha = 0")
    c_e, c_r, x0, mask = contrast_inputs(dataset, cluster_id)

    alphas = grid.values
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            candidates = list(
                pool.map(lambda a: _candidate(c_e, c_r, a, x0, mask), alphas)
            )
    else:
        candidates = [_candidate(c_e, c_r, a, x0, mask) for a in alphas]

    v_ref = candidates[0].variance
    chosen = -1
    best = -math.inf
    for i, cand in enumerate(candidates):
        if cand.variance >= gamma * v_ref and cand.discrepancy > best:
            best = cand.discrepancy
            chosen = i
    if chosen < 0:
        return AlphaScan(gamma, candidates, 0, fallback=True)
    return AlphaScan(gamma, candidates, chosen)
