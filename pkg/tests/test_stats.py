import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from randinv.core import derive_stream
from randinv.groups import CapacityError, PermutationGroup, RotationGroup, SignFlipGroup
from randinv.stats import (
    DegenerateInputError,
    EmgdModel,
    TwoSampleModel,
    WeightedStatistic,
    emgd_sample,
    lil_ratio,
    mean_diff,
    one_sample_t,
    randomization_pvalue,
    randomization_threshold,
    rotation_bilinear_exact,
    rotation_bilinear_mc,
    threshold_from_values,
    two_sample_t,
    weighted_sum,
)


def total(x):
    return np.sum(x, axis=-1)


class TestSimpleStatistics:
    def test_weighted_sum(self):
        assert weighted_sum(np.zeros(4), WeightedStatistic.uniform(4)) == 0
        assert weighted_sum([1, 1, 1, 1], WeightedStatistic([0.5] * 4)) == pytest.approx(2.0)
        assert weighted_sum([3.0], WeightedStatistic([1.0])) == 3.0

    def test_weights_must_be_unit(self):
        with pytest.raises(ValueError):
            WeightedStatistic([1.0, 1.0])

    def test_lipschitz_accessor(self):
        assert WeightedStatistic([0.6, -0.8]).lipschitz == pytest.approx(0.8)
        assert WeightedStatistic.uniform(25).lipschitz == pytest.approx(0.2)

    def test_weighted_length_mismatch(self):
        with pytest.raises(ValueError):
            weighted_sum(np.ones(3), WeightedStatistic.uniform(4))

    def test_mean_diff(self):
        assert mean_diff([1, 2, 3, 4], 2, 2) == pytest.approx(-2.0)
        assert mean_diff([5.0] * 7, 3, 4) == 0
        assert mean_diff([2.0, 2.0, -1.0], 2, 1) == pytest.approx(3.0)
        with pytest.raises(ValueError):
            mean_diff([1, 2, 3], 2, 2)

    def test_mean_diff_batched(self):
        x = np.array([[1, 2, 3, 4], [0, 0, 1, 1]], dtype=float)
        assert mean_diff(x, 2, 2).tolist() == [-2.0, -1.0]


class TestTTests:
    def test_one_sample_zero_mean(self):
        r = one_sample_t([-1.0, 1.0])
        assert r.statistic == 0 and r.p_value == 1.0

    def test_one_sample_123(self):
        r = one_sample_t([1.0, 2.0, 3.0])
        assert r.statistic == pytest.approx(2 * math.sqrt(3), rel=1e-14)
        assert r.df == 2

    def test_one_sample_matches_scipy(self):
        x = derive_stream(1).normal(17) + 0.4
        ref = sps.ttest_1samp(x, 0.0)
        r = one_sample_t(x)
        assert r.statistic == pytest.approx(ref.statistic, rel=1e-12)
        assert r.p_value == pytest.approx(ref.pvalue, rel=1e-9)

    def test_one_sample_degenerate(self):
        with pytest.raises(DegenerateInputError):
            one_sample_t([2.0, 2.0, 2.0])

    def test_equal_means(self):
        x = np.array([1.0, 3.0, 0.0, 4.0])
        for variant in ("pooled", "welch"):
            r = two_sample_t(x, 2, 2, variant)
            assert r.statistic == 0 and r.p_value == 1.0

    def test_pooled_equals_welch_when_balanced(self):
        a = np.array([1.0, 2.5, 4.0, 0.5])
        b = 10 + a[::-1] * 1.0  # same sample variance
        x = np.concatenate([a, b])
        p, w = two_sample_t(x, 4, 4, "pooled"), two_sample_t(x, 4, 4, "welch")
        assert abs(p.statistic - w.statistic) <= 1e-12
        assert w.df == pytest.approx(2 * (4 - 1), rel=1e-12)

    @pytest.mark.parametrize("variant, equal_var", [("pooled", True), ("welch", False)])
    def test_matches_scipy(self, variant, equal_var):
        s = derive_stream(2)
        a, b = s.normal(12), 3 * s.normal(7) + 0.8
        ref = sps.ttest_ind(a, b, equal_var=equal_var)
        r = two_sample_t(np.concatenate([a, b]), 12, 7, variant)
        assert r.statistic == pytest.approx(ref.statistic, rel=1e-12)
        assert r.p_value == pytest.approx(ref.pvalue, rel=1e-8)

    def test_welch_df_limit(self):
        # with n huge and equal spread the df tends to m - 1
        s = derive_stream(3)
        a, b = s.normal(100_000), s.normal(5)
        assert two_sample_t(np.concatenate([a, b]), 100_000, 5).df == pytest.approx(4, rel=0.1)

    def test_errors(self):
        with pytest.raises(ValueError):
            two_sample_t([1.0, 2.0, 3.0], 1, 2)
        with pytest.raises(DegenerateInputError):
            two_sample_t([1.0, 1.0, 2.0, 2.0], 2, 2, "pooled")
        with pytest.raises(ValueError):
            two_sample_t([1.0, 2.0, 3.0, 5.0], 2, 2, "student")


class TestRandomizationPValue:
    def test_constant_under_permutations(self):
        x = np.full(6, 2.5)
        out = randomization_pvalue(x, lambda v: mean_diff(v, 3, 3), PermutationGroup(6), 200, derive_stream(0))
        assert out.p_value == 1.0
        assert np.all(out.replicates == out.observed)

    def test_r_zero(self):
        out = randomization_pvalue([1.0, 2.0], total, SignFlipGroup(2), 0)
        assert out.p_value == 1.0 and out.r == 0

    def test_exact_signs_enumeration(self):
        out = randomization_pvalue([1.0, 2.0], total, SignFlipGroup(2), exact=True)
        assert sorted(out.replicates.tolist()) == [-3.0, -1.0, 1.0, 3.0]
        assert out.observed == 3.0
        assert out.p_value == 0.25

    def test_exact_bruteforce_oracle(self):
        x = derive_stream(4).normal(6)
        obs = x.sum() * 0.7 + x[0]

        def stat(v):
            return 0.7 * np.sum(v, axis=-1) + v[..., 0]

        brute = sum(stat(np.array(e) * x) >= obs for e in itertools.product((1, -1), repeat=6)) / 64
        assert randomization_pvalue(x, stat, SignFlipGroup(6), exact=True).p_value == brute
        assert stat(x) == pytest.approx(obs)

    def test_invariant_statistic_gives_one(self):
        for seed in range(5):
            x = derive_stream(seed).normal(9)
            out = randomization_pvalue(x, total, PermutationGroup(9), 300, derive_stream(seed, 1))
            assert out.p_value == 1.0

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 10), st.integers(0, 50), st.integers(0, 2**32))
    def test_pvalue_range_and_formula(self, n, r, seed):
        x = derive_stream(seed).normal(n)
        out = randomization_pvalue(x, total, SignFlipGroup(n), r, derive_stream(seed, 1))
        assert 1 / (1 + r) <= out.p_value <= 1
        hits = np.sum(out.replicates >= out.observed - 1e-12 * max(1, abs(out.observed)))
        assert out.p_value == pytest.approx((1 + hits) / (1 + r))

    def test_deterministic(self):
        x = derive_stream(5).normal(20)
        a = randomization_pvalue(x, total, SignFlipGroup(20), 500, derive_stream(6))
        b = randomization_pvalue(x, total, SignFlipGroup(20), 500, derive_stream(6))
        assert a.p_value == b.p_value and np.array_equal(a.replicates, b.replicates)

    @pytest.mark.parametrize("n", [6, 9, 12])
    def test_monte_carlo_matches_exact(self, n):
        x = derive_stream(7, n).normal(n) + 0.3
        exact = randomization_pvalue(x, total, SignFlipGroup(n), exact=True).p_value
        r = 100_000
        mc = randomization_pvalue(x, total, SignFlipGroup(n), r, derive_stream(8, n)).p_value
        assert abs(mc - exact) <= 4 * math.sqrt(exact * (1 - exact) / r) + 1 / r

    def test_alternatives(self):
        x = np.array([1.0, 2.0])
        g = SignFlipGroup(2)
        assert randomization_pvalue(x, total, g, exact=True, alternative="less").p_value == 1.0
        assert randomization_pvalue(x, total, g, exact=True, alternative="two-sided").p_value == 0.5
        with pytest.raises(ValueError):
            randomization_pvalue(x, total, g, exact=True, alternative="sideways")

    def test_row_wise_statistic(self):
        def scalar_only(v):
            return float(np.median(v))

        out = randomization_pvalue([3.0, -1.0, 2.0], scalar_only, SignFlipGroup(3), exact=True)
        assert out.replicates.size == 8

    def test_rotation_not_enumerable(self):
        with pytest.raises(CapacityError):
            randomization_pvalue(np.ones(3), total, RotationGroup(3), exact=True)

    def test_needs_stream(self):
        with pytest.raises(ValueError):
            randomization_pvalue(np.ones(3), total, SignFlipGroup(3), 10)

    def test_exact_permutations(self):
        x = np.array([0.0, 1.0, 2.0, 3.0])
        out = randomization_pvalue(x, lambda v: mean_diff(v, 2, 2), PermutationGroup(4), exact=True)
        # observed -2 is the minimum; every one of the 24 relabellings is >= it
        assert out.p_value == 1.0
        out = randomization_pvalue(x[::-1], lambda v: mean_diff(v, 2, 2), PermutationGroup(4), exact=True)
        assert out.p_value == pytest.approx(4 / 24)


class TestThreshold:
    def test_alpha_quarter(self):
        assert randomization_threshold([1.0, 2.0], total, SignFlipGroup(2), alpha=0.25, exact=True) == 1.0

    def test_alpha_half(self):
        assert randomization_threshold([1.0, 2.0], total, SignFlipGroup(2), alpha=0.5, exact=True) == -1.0

    def test_alpha_near_one(self):
        assert randomization_threshold([1.0, 2.0], total, SignFlipGroup(2), alpha=0.999, exact=True) == -3.0

    def test_defining_property(self):
        v = derive_stream(9).normal(1000).round(1)  # plenty of ties
        for alpha in (0.01, 0.05, 0.1, 0.5, 0.9):
            t = threshold_from_values(v, alpha)
            assert np.mean(v > t) <= alpha
            smaller = v[v < t]
            if smaller.size:
                assert np.mean(v > smaller.max()) > alpha

    def test_attached_to_outcome(self):
        out = randomization_pvalue([1.0, 2.0], total, SignFlipGroup(2), exact=True, alpha=0.25)
        assert out.threshold == 1.0

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            threshold_from_values([1.0, 2.0], 1.0)
        with pytest.raises(ValueError):
            threshold_from_values([], 0.5)

    def test_exact_size_on_symmetric_data(self):
        # with sign-symmetric data the exact test has size at most alpha
        s = derive_stream(10)
        g = SignFlipGroup(8)
        hits = 0
        reps = 2000
        for _ in range(reps):
            x = s.uniform(-1, 1, 8)
            hits += total(x) > randomization_threshold(x, total, g, alpha=0.1, exact=True)
        assert hits / reps <= 0.1 + 3 * math.sqrt(0.1 / reps)


class TestEmgd:
    def test_gaussian_variance(self):
        z = emgd_sample(EmgdModel(math.inf), derive_stream(11), 100_000)
        se = np.std(z**2, ddof=1) / math.sqrt(z.size)
        assert abs(np.mean(z**2) - 1) <= 3 * se

    def test_centered(self):
        z = emgd_sample(EmgdModel(1.0), derive_stream(12), 100_000)
        assert abs(z.mean()) <= 3 * z.std(ddof=1) / math.sqrt(z.size)

    def test_variance_two(self):
        z = emgd_sample(EmgdModel(1.0), derive_stream(13), 100_000)
        se = np.std((z - z.mean()) ** 2, ddof=1) / math.sqrt(z.size)
        assert abs(z.var() - 2) <= 3 * se
        assert EmgdModel(1.0).variance == 2.0

    def test_scalar_draw(self):
        assert isinstance(float(emgd_sample(EmgdModel(0.1), derive_stream(0))), float)

    @pytest.mark.parametrize("rate", [0.0, -1.0])
    def test_invalid(self, rate):
        with pytest.raises(ValueError):
            EmgdModel(rate)


class TestTwoSampleModel:
    def test_orientation(self):
        m = TwoSampleModel(5, 9, 1.0, 4.0).oriented()
        assert (m.n, m.m, m.var1, m.var2) == (9, 5, 4.0, 1.0)

    def test_sample_variances(self):
        model = TwoSampleModel(3, 2, 1.0, 9.0, eta=2.0)
        x = model.sample(derive_stream(14), size=50_000)
        assert x.shape == (50_000, 5)
        assert np.allclose(x.var(axis=0), [1, 1, 1, 9, 9], rtol=0.05)
        assert np.allclose(x.mean(axis=0), 2.0, atol=0.05)

    def test_invalid(self):
        with pytest.raises(ValueError):
            TwoSampleModel(0, 3, 1, 1)
        with pytest.raises(ValueError):
            TwoSampleModel(3, 3, 1, 0)


class TestLil:
    def test_zero(self):
        assert lil_ratio(np.zeros(10), 2.0) == 0

    def test_value(self):
        x = np.zeros(10)
        x[0] = 1.0
        assert lil_ratio(x, 2.0) == pytest.approx(1 / (2 * math.sqrt(math.log(math.log(10)))), rel=1e-14)
        assert lil_ratio(x, 2.0) == pytest.approx(0.54749, abs=1e-5)

    def test_sign_and_permutation_invariance(self):
        x = derive_stream(15).normal(50)
        assert lil_ratio(-x, 1.0) == lil_ratio(x, 1.0)
        assert lil_ratio(x[::-1], 1.0) == pytest.approx(lil_ratio(x, 1.0), rel=1e-13)

    def test_infinity(self):
        x = np.ones(16)
        assert lil_ratio(x, math.inf) == pytest.approx(16 / (math.sqrt(2) * 4 * math.sqrt(math.log(math.log(16)))))

    def test_small_n(self):
        with pytest.raises(ValueError):
            lil_ratio(np.ones(2), 2.0)


class TestRotationBilinear:
    def test_identity(self):
        x, y = np.array([1.0, 2.0, 3.0]), np.array([0.5, -1.0, 2.0])
        assert rotation_bilinear_exact(np.eye(3), x, y) == pytest.approx(x @ y)

    def test_orthogonal(self):
        assert rotation_bilinear_exact(np.diag([1.0, 5.0]), [1.0, 0.0], [0.0, 1.0]) == 0

    def test_diag(self):
        n = 7
        e1 = np.eye(n)[0]
        assert rotation_bilinear_exact(np.diag(np.arange(1.0, n + 1)), e1, e1) == pytest.approx((n + 1) / 2)

    def test_asymmetric(self):
        with pytest.raises(ValueError):
            rotation_bilinear_exact(np.array([[0.0, 1.0], [0.0, 0.0]]), [1.0, 0.0], [1.0, 0.0])

    def test_n1(self):
        est, se = rotation_bilinear_mc(np.array([[2.5]]), [2.0], [3.0], 10, derive_stream(16))
        assert est == 15.0 and se == 0.0

    def test_identity_mc(self):
        x, y = np.array([1.0, 2.0, 3.0]), np.array([0.5, -1.0, 2.0])
        est, se = rotation_bilinear_mc(np.eye(3), x, y, 200, derive_stream(17))
        assert est == pytest.approx(x @ y, abs=1e-12) and se <= 1e-12

    def test_random_symmetric(self):
        s = derive_stream(18)
        g = s.normal((6, 6))
        a = g + g.T
        x, y = s.normal(6), s.normal(6)
        est, se = rotation_bilinear_mc(a, x, y, 20_000, derive_stream(19))
        assert abs(est - rotation_bilinear_exact(a, x, y)) <= 4 * se

    def test_needs_two(self):
        with pytest.raises(ValueError):
            rotation_bilinear_mc(np.eye(2), [1.0, 0.0], [1.0, 0.0], 1, derive_stream(0))
