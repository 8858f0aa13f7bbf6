"""Planted binary-tree mixture: mean construction, shifting, sampling,
and the separation-condition checkers."""

import math

import numpy as np
import pytest

from hierbench.btgm import (
    BtgmSpec,
    Hierarchy,
    MixtureSpec,
    btgm_means,
    btgm_mixture,
    check_corollary,
    check_theorem1,
    check_theorem2,
    radius_bound,
    sample,
    shift_means,
)
from hierbench.core import StructuralError, check_refinement


def lca_height(i: int, j: int, h: int) -> int:
    """Height of the lowest common ancestor of leaves i and j in the
    complete binary tree of height h (0 for i == j)."""
    t = 0
    while i != j:
        i >>= 1
        j >>= 1
        t += 1
    return t


class TestBtgmMeans:
    def test_single_split(self):
        means = btgm_means(BtgmSpec(1, 2.0, 2.0, 3))
        assert means.shape == (2, 3)
        assert set(map(tuple, means)) == {(2.0, 0.0, 0.0), (-2.0, 0.0, 0.0)}

    def test_height_two(self):
        means = btgm_means(BtgmSpec(2, 1.0, 2.0, 2))
        assert set(map(tuple, means)) == {(2.0, 1.0), (2.0, -1.0),
                                          (-2.0, 1.0), (-2.0, -1.0)}

    def test_trailing_coordinates_zero(self):
        means = btgm_means(BtgmSpec(3, 8.0, 2.0, 100))
        assert np.all(means[:, 3:] == 0)

    def test_dimension_too_small(self):
        with pytest.raises(ValueError, match="must be >= h"):
            BtgmSpec(3, 1.0, 2.0, 2)

    def test_norm_identity(self):
        spec = BtgmSpec(4, 1.5, 3.0, 10)
        means = btgm_means(spec)
        want = spec.m ** 2 * sum(spec.alpha ** (2 * (spec.h - j))
                                 for j in range(1, spec.h + 1))
        assert np.allclose((means ** 2).sum(axis=1), want)

    def test_tree_distance_controls_mean_distance(self):
        # alpha = 2: any pair whose subtree join sits at height t is at
        # least m * 2^t apart
        spec = BtgmSpec(3, 1.25, 2.0, 5)
        means = btgm_means(spec)
        for i in range(spec.k):
            for j in range(i + 1, spec.k):
                t = lca_height(i, j, spec.h)
                dist = np.linalg.norm(means[i] - means[j])
                assert dist >= spec.m * 2 ** t - 1e-12

    def test_general_alpha_separation(self):
        # for alpha >= 2 the exact bound is 2 m alpha^(t-1)
        spec = BtgmSpec(3, 1.0, 3.5, 6)
        means = btgm_means(spec)
        for i in range(spec.k):
            for j in range(i + 1, spec.k):
                t = lca_height(i, j, spec.h)
                dist = np.linalg.norm(means[i] - means[j])
                assert dist >= 2 * spec.m * spec.alpha ** (t - 1) - 1e-12


class TestShiftMeans:
    def test_documented_rotation(self):
        row = np.array([[4.0, 2.0, 1.0, 0.0, 0.0, 0.0]])
        out = shift_means(row, 1, 3)
        assert list(out[0]) == [0.0, 0.0, 0.0, 4.0, 2.0, 1.0]

    def test_zero_rotation_is_identity(self):
        means = btgm_means(BtgmSpec(2, 1.0, 2.0, 4))
        assert np.array_equal(shift_means(means, 4, 0), means)

    def test_unshifted_rows_untouched(self):
        means = btgm_means(BtgmSpec(2, 1.0, 2.0, 6))
        out = shift_means(means, 2, 3)
        assert np.array_equal(out[2:], means[2:])

    def test_norms_preserved(self):
        means = btgm_means(BtgmSpec(3, 2.0, 2.0, 10))
        out = shift_means(means, 4, 5)
        assert np.allclose((out ** 2).sum(axis=1), (means ** 2).sum(axis=1))

    def test_within_group_distances_preserved(self):
        means = btgm_means(BtgmSpec(3, 2.0, 2.0, 10))
        out = shift_means(means, 4, 5)
        for i in range(4):
            for j in range(i + 1, 4):
                assert np.linalg.norm(out[i] - out[j]) == pytest.approx(
                    np.linalg.norm(means[i] - means[j]), abs=1e-12)

    def test_disjoint_supports_equalize_cross_distances(self):
        # rotation >= h moves the shifted group onto fresh coordinates, so
        # every cross-group distance becomes sqrt(|a|^2 + |b|^2); with the
        # shared row norm that is one constant, and it stays above the
        # closest unshifted pair distance (2m) whenever h >= 2
        spec = BtgmSpec(3, 2.0, 2.0, 10)
        means = btgm_means(spec)
        out = shift_means(means, 4, 5)
        norm_sq = float((means[0] ** 2).sum())
        for i in range(4):
            for j in range(4, spec.k):
                after = np.linalg.norm(out[i] - out[j])
                assert after == pytest.approx(np.sqrt(2 * norm_sq), rel=1e-12)
                assert after >= 2 * spec.m

    def test_range_checks(self):
        means = np.zeros((2, 4))
        with pytest.raises(ValueError, match="count"):
            shift_means(means, 3, 1)
        with pytest.raises(ValueError, match="rotation"):
            shift_means(means, 1, 4)


class TestMixtureSpec:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            MixtureSpec(np.array([0.5, 0.6]), np.zeros((2, 2)), np.ones(2))

    def test_nu_is_weight_ratio(self):
        mix = MixtureSpec(np.array([0.75, 0.25]), np.zeros((2, 2)), np.ones(2))
        assert mix.nu == pytest.approx(3.0)

    def test_btgm_mixture_is_uniform_unit_variance(self):
        mix = btgm_mixture(BtgmSpec(2, 1.0, 2.0, 4))
        assert np.allclose(mix.weights, 0.25)
        assert np.all(mix.stddevs == 1.0)
        assert mix.h == 2


class TestHierarchy:
    def test_btgm_hierarchy_levels(self):
        hier = Hierarchy.btgm(2)
        assert hier.levels[0] == tuple(frozenset([i]) for i in range(4))
        assert set(hier.levels[1]) == {frozenset({0, 1}), frozenset({2, 3})}

    def test_non_partition_rejected(self):
        with pytest.raises(StructuralError):
            Hierarchy.from_lists(3, [[[0, 1], [1, 2]]])

    def test_non_refinement_rejected(self):
        with pytest.raises(StructuralError, match="refinement"):
            Hierarchy.from_lists(4, [[[0, 1], [2, 3]], [[0, 2], [1, 3]]])


class TestSample:
    def test_degenerate_sigma_pins_points_to_means(self):
        means = btgm_means(BtgmSpec(2, 3.0, 2.0, 4))
        mix = MixtureSpec(np.full(4, 0.25), means, np.full(4, 1e-12), h=2)
        ds = sample(mix, 200, seed=1)
        assert np.allclose(ds.points, means[ds.flat_labels], atol=1e-9)

    def test_component_proportions_near_uniform(self):
        mix = btgm_mixture(BtgmSpec(3, 8.0, 2.0, 100))
        ds = sample(mix, 2000 * 8, seed=5)
        props = np.bincount(ds.flat_labels, minlength=8) / ds.n
        assert np.all(np.abs(props - 0.125) < 0.03 * 1.0)

    def test_empirical_radius_within_bound(self):
        spec = BtgmSpec(2, 5.0, 2.0, 20)
        mix = btgm_mixture(spec)
        n = 500
        bound = radius_bound(1.0, spec.d, n)
        for seed in range(20):
            ds = sample(mix, n, seed=seed)
            radii = np.linalg.norm(ds.points - mix.means[ds.flat_labels], axis=1)
            assert radii.max() <= bound

    def test_bit_reproducible(self):
        mix = btgm_mixture(BtgmSpec(2, 2.0, 2.0, 6))
        a = sample(mix, 64, seed=11)
        b = sample(mix, 64, seed=11)
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.flat_labels, b.flat_labels)

    def test_prefix_stability(self):
        # point i depends only on (seed, i), not on how many points exist
        mix = btgm_mixture(BtgmSpec(2, 2.0, 2.0, 6))
        small = sample(mix, 10, seed=3)
        large = sample(mix, 50, seed=3)
        assert np.array_equal(small.points, large.points[:10])

    def test_level_labels_are_index_prefixes(self):
        mix = btgm_mixture(BtgmSpec(3, 2.0, 2.0, 8))
        ds = sample(mix, 300, seed=2)
        comp = ds.flat_labels
        assert np.array_equal(ds.level_labels[:, 2], comp)
        assert np.array_equal(ds.level_labels[:, 1], comp >> 1)
        assert np.array_equal(ds.level_labels[:, 0], comp >> 2)
        check_refinement(ds.level_labels)


class TestTheorem1Check:
    def test_huge_separation_passes(self):
        means = np.zeros((2, 4))
        means[1, 0] = 1000.0
        mix = MixtureSpec(np.array([0.5, 0.5]), means, np.ones(2))
        report = check_theorem1(mix, 100)
        assert report.passed

    def test_identical_means_fail_with_zero_separation(self):
        mix = MixtureSpec(np.array([0.5, 0.5]), np.zeros((2, 4)), np.ones(2))
        report = check_theorem1(mix, 100)
        assert not report.passed
        assert "distance 0" in report.checks[0].detail

    def test_standard_benchmark_fails_on_adjacent_leaves(self):
        mix = btgm_mixture(BtgmSpec(3, 8.0, 2.0, 100))
        report = check_theorem1(mix, 16000)
        assert not report.passed
        i, j = report.tightest_pair
        assert i ^ j == 1  # siblings in the planted tree

    def test_sample_size_condition(self):
        means = np.zeros((4, 4))
        means[np.arange(4), np.arange(4)] = 1e6
        mix = MixtureSpec(np.full(4, 0.25), means, np.ones(4))
        # needs n >= 16 log(4) / 0.25 ~ 88.7
        assert not check_theorem1(mix, 80).passed
        assert check_theorem1(mix, 100).passed

    def test_report_quantities_exact(self):
        means = np.zeros((2, 9))
        means[1, 0] = 50.0
        mix = MixtureSpec(np.array([0.5, 0.5]), means, np.array([1.0, 2.0]))
        n = 1000
        report = check_theorem1(mix, n)
        s0 = radius_bound(1.0, 9, n)
        s1 = radius_bound(2.0, 9, n)
        assert report.radii == pytest.approx([s0, s1])
        assert report.dist_upper[0, 1] == pytest.approx(50.0 + s0 + s1)
        assert report.dist_lower[0, 1] == pytest.approx(50.0 - s0 - s1)


class TestTheorem2Check:
    def separated_mixture(self):
        n = 1000
        d = 10
        m = 40.0 * (math.sqrt(d) + 2.0 * math.sqrt(math.log(n)))
        spec = BtgmSpec(2, m, 16.0, d)
        return btgm_mixture(spec), Hierarchy.btgm(2), n

    def test_separated_btgm_passes_all_levels(self):
        mix, hier, n = self.separated_mixture()
        report = check_theorem2(mix, hier, n)
        assert report.passed
        assert len(report.checks) == 2
        assert all(c.passed for c in report.checks)

    def test_singleton_level_reduces_to_pairwise(self):
        mix, hier, n = self.separated_mixture()
        report = check_theorem2(mix, hier, n)
        # finest level: blocks are singletons, so the binding margin is
        # min over pairs of D^-_{ij} - c1 * max(2 S_i, 2 S_j)
        upper = report.dist_upper
        lower = report.dist_lower
        k = mix.k
        want = min(
            lower[i, j] - 8.0 * max(upper[i, i], upper[j, j])
            for i in range(k) for j in range(i + 1, k))
        assert report.checks[0].margin == pytest.approx(want)

    def test_sum_form_is_stricter(self):
        mix, hier, n = self.separated_mixture()
        rmax = check_theorem2(mix, hier, n, combine="max")
        rsum = check_theorem2(mix, hier, n, combine="sum")
        for cmax, csum in zip(rmax.checks, rsum.checks):
            assert csum.margin <= cmax.margin + 1e-9

    def test_mismatched_hierarchy_rejected(self):
        mix, _, n = self.separated_mixture()
        with pytest.raises(StructuralError):
            check_theorem2(mix, Hierarchy.btgm(3), n)

    def test_overlapping_mixture_fails(self):
        mix = btgm_mixture(BtgmSpec(2, 1.0, 2.0, 10))
        report = check_theorem2(mix, Hierarchy.btgm(2), 1000)
        assert not report.passed


class TestCorollaryCheck:
    def test_small_alpha_fails(self):
        report = check_corollary(BtgmSpec(2, 1000.0, 2.0, 9), 1000)
        assert not report.passed
        assert not report.checks[0].passed

    def test_arithmetic_example(self):
        # alpha=10 gives c2 = 2*(2*8+1)/(10-8) = 17, so the margin bound is
        # 34*(3 + sqrt(log 1000)) ~ 191.4
        report = check_corollary(BtgmSpec(2, 200.0, 10.0, 9), 1000)
        assert report.passed
        margin_check = report.checks[1]
        need = 200.0 - 2.0 * 17.0 * (3.0 + math.sqrt(math.log(1000.0)))
        assert margin_check.margin == pytest.approx(need, rel=1e-9)
        assert not check_corollary(BtgmSpec(2, 190.0, 10.0, 9), 1000).passed

    def test_sample_size_fails_regardless_of_margin(self):
        # k=4 needs n >= 16 * 4 * log 4 ~ 88.7
        report = check_corollary(BtgmSpec(2, 1e9, 10.0, 9), 50)
        assert not report.passed
        assert not report.checks[-1].passed


def test_radius_bound_formula():
    assert radius_bound(2.0, 16, math.e) == pytest.approx(2.0 * (4.0 + 2.0))
