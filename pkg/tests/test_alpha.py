import math

import numpy as np
import pytest

from cluster_contrast.alpha import (
    alpha_grid,
    discrepancy,
    histogram,
    histogram_intersection,
    scaled_variance,
    select_alpha,
    shared_bins,
)
from cluster_contrast.cpca import ccpca_fit, project

from conftest import make_dataset, two_blob_dataset


def oracle_bin_index(x, start, width, nbins):
    idx = math.floor((x - start) / width)
    return min(max(idx, 0), nbins - 1)


def oracle_counts(values, bins):
    start, width, nbins = bins
    counts = [0] * nbins
    for x in values:
        counts[oracle_bin_index(float(x), start, width, nbins)] += 1
    return counts


def oracle_intersection(a, b, bins):
    ca = oracle_counts(a, bins)
    cb = oracle_counts(b, bins)
    return sum(min(x, y) for x, y in zip(ca, cb))


class TestAlphaGrid:
    def test_three_values(self):
        grid = alpha_grid(3, 1.0, 100.0)
        assert np.allclose(grid.values, [0.0, 1.0, 100.0])

    def test_four_values_log_spaced(self):
        grid = alpha_grid(4, 1.0, 100.0)
        assert np.allclose(grid.values, [0.0, 1.0, 10.0, 100.0])

    def test_defaults(self):
        grid = alpha_grid()
        assert grid.values.size == 40
        assert grid.values[0] == 0.0
        assert grid.values[1] == pytest.approx(0.1)
        assert grid.values[-1] == pytest.approx(1000.0)

    def test_invalid_range(self):
        with pytest.raises(ValueError):
            alpha_grid(5, 10.0, 1.0)
        with pytest.raises(ValueError):
            alpha_grid(1, 0.1, 10.0)


class TestSharedBins:
    def test_degenerate_spread_single_bin(self):
        bins = shared_bins([2.0, 2.0, 2.0], [2.0])
        assert bins[2] == 1
        counts = histogram([2.0, 2.0, 2.0], bins).counts
        assert counts.sum() == 3

    def test_scott_formula(self):
        values = np.arange(100, dtype=float)
        start, width, nbins = shared_bins(values, [])
        sigma = values.std()
        assert width == pytest.approx(3.49 * sigma * 100 ** (-1 / 3))
        assert start == 0.0
        assert nbins == math.ceil((values.max() - values.min()) / width)

    def test_identical_sets_match_single_set(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=50)
        assert shared_bins(a, a) == shared_bins(a, [])

    def test_bin_cap(self):
        # one extreme outlier in a large tight sample pushes the Scott bin
        # count past the guard; the width widens to keep covering the range
        rng = np.random.default_rng(7)
        a = np.concatenate([rng.uniform(0, 1, size=400_000), [1e9]])
        start, width, nbins = shared_bins(a, [])
        assert nbins == 10_000
        assert width == pytest.approx((a.max() - a.min()) / 10_000)


class TestHistogramIntersection:
    def test_full_overlap(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=37)
        assert histogram_intersection(a, a) == 37

    def test_disjoint(self):
        assert histogram_intersection(np.zeros(5) + [0, 1, 2, 3, 4],
                                      1e6 + np.arange(5.0)) == 0

    def test_matches_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            a = rng.normal(0, 1, size=200)
            b = rng.normal(rng.uniform(0, 2), rng.uniform(0.5, 2), size=200)
            bins = shared_bins(a, b)
            assert histogram_intersection(a, b) == oracle_intersection(a, b, bins)
            assert oracle_counts(a, bins) == histogram(a, bins).counts.tolist()


class TestDiscrepancy:
    def test_identical_projections(self):
        a = np.random.default_rng(3).normal(size=50)
        assert discrepancy(a, a) == pytest.approx(1 / 50)

    def test_separated_gives_inf(self):
        d = discrepancy(np.arange(10.0), np.arange(10.0) + 1e9)
        assert math.isinf(d) and d > 0

    def test_affine_invariance_power_of_two(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=120)
        b = rng.normal(1.0, 2.0, size=80)
        assert discrepancy(a, b) == discrepancy(4.0 * a, 4.0 * b)

    def test_affine_invariance_general(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=120)
        b = rng.normal(1.0, 2.0, size=80)
        base = discrepancy(a, b)
        assert discrepancy(1.7 * a + 0.3, 1.7 * b + 0.3) == pytest.approx(base)


class TestScaledVariance:
    def test_constant_projection(self):
        assert scaled_variance(np.ones(10), np.arange(10.0)) == 0.0

    def test_direct_formula(self):
        k = np.array([0.0, 5.0, 10.0])
        r = np.array([0.0, 10.0])
        scaled = (k - 0.0) / 10.0
        assert scaled_variance(k, r) == pytest.approx(scaled.var())

    def test_scale_invariance(self):
        rng = np.random.default_rng(6)
        k = rng.normal(size=60)
        r = rng.normal(size=60)
        assert scaled_variance(k, r) == pytest.approx(scaled_variance(8.0 * k, 8.0 * r))
        assert scaled_variance(k, r) == pytest.approx(scaled_variance(3.7 * k, 3.7 * r))


class TestSelectAlpha:
    def test_gamma_zero_returns_global_argmax(self):
        ds = two_blob_dataset(seed=7, d=6, gap=4.0)
        scan = select_alpha(ds, 0, gamma=0.0)
        best = max(c.discrepancy for c in scan.candidates)
        assert scan.chosen.discrepancy == best

    def test_separable_synthetic_prefers_contrast(self):
        # the cluster is compact and separable in feature 0 alone, while the
        # complement carries large variance in the other features: plain PCA
        # picks a noise direction, contrast must rotate to feature 0
        rng = np.random.default_rng(8)
        k = rng.normal(0.0, 0.8, size=(50, 10))
        k[:, 0] += 5.0
        r = rng.normal(0.0, 0.8, size=(150, 10))
        r[:, 1:] = rng.normal(0.0, 3.0, size=(150, 9))
        ds = make_dataset(np.vstack([k, r]), labels=[0] * 50 + [1] * 150)
        scan = select_alpha(ds, 0)
        d0 = scan.candidates[0].discrepancy
        assert scan.chosen_alpha > 0
        assert scan.chosen.discrepancy > d0
        assert scan.chosen.variance >= 0.5 * scan.candidates[0].variance
        # exhaustive confirmation over the grid
        v_ref = scan.candidates[0].variance
        feasible = [c for c in scan.candidates if c.variance >= 0.5 * v_ref]
        assert scan.chosen.discrepancy == max(c.discrepancy for c in feasible)

    def test_smallest_alpha_wins_ties(self):
        ds = two_blob_dataset(seed=9, d=4, gap=60.0, scale=0.3)
        scan = select_alpha(ds, 0, gamma=0.0)
        # perfect separation for many alphas: ties at +inf resolve to the first
        tied = [i for i, c in enumerate(scan.candidates)
                if c.discrepancy == scan.chosen.discrepancy]
        assert scan.chosen_index == tied[0]

    def test_serial_parallel_identical(self):
        ds = two_blob_dataset(seed=10, d=8, gap=3.0)
        serial = select_alpha(ds, 1, threads=1)
        for threads in (2, 8):
            par = select_alpha(ds, 1, threads=threads)
            assert par.chosen_index == serial.chosen_index
            for a, b in zip(serial.candidates, par.candidates):
                assert (a.discrepancy == b.discrepancy or
                        (math.isinf(a.discrepancy) and math.isinf(b.discrepancy)))
                assert a.variance == b.variance

    def test_infeasible_gamma_falls_back(self):
        ds = two_blob_dataset(seed=11)
        scan = select_alpha(ds, 0, gamma=1e9)
        assert scan.fallback
        assert scan.chosen_alpha == 0.0

    def test_scan_matches_public_scoring(self):
        # the fused kernel must agree with the public D/V functions
        from cluster_contrast.cpca import contrast_inputs, contrast_matrix, top_eigs

        ds = two_blob_dataset(seed=12, d=5, gap=2.0)
        scan = select_alpha(ds, 0)
        c_e, c_r, x0, mask = contrast_inputs(ds, 0)
        for cand in list(scan.candidates)[::7]:
            pair = top_eigs(contrast_matrix(c_e, c_r, cand.alpha), 1)[0]
            proj = x0 @ pair.vector
            d_pub = discrepancy(proj[mask], proj[~mask])
            v_pub = scaled_variance(proj[mask], proj[~mask])
            if math.isinf(d_pub):
                assert math.isinf(cand.discrepancy)
            else:
                assert cand.discrepancy == pytest.approx(d_pub)
            assert cand.variance == pytest.approx(v_pub)
            assert cand.eigenpair.value == pytest.approx(pair.value)

    def test_json_encodes_inf(self):
        ds = two_blob_dataset(seed=13, d=4, gap=60.0, scale=0.3)
        doc = select_alpha(ds, 0).to_json_dict()
        assert any(c["D"] == "inf" for c in doc["candidates"])
        assert isinstance(doc["chosen_alpha"], float)
