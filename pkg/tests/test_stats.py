"""The from-scratch tests must match an independent reference (scipy.stats)."""

import numpy as np
import pytest
import scipy.stats as sps

from alqa.errors import ContractError, DegenerateSampleError, SampleSizeError
from alqa.stats import (
    WILCOXON_EXACT_MAX_N,
    paired_t,
    shapiro_wilk,
    wilcoxon_signed_rank,
)


def _scipy_wilcoxon(a, b, method):
    try:
        return sps.wilcoxon(a, b, method=method)
    except TypeError:  # older scipy spells it 'mode'
        return sps.wilcoxon(a, b, mode=method)


class TestShapiroWilk:
    def test_oracle_agreement_on_random_fixtures(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(3, 31))
            x = rng.normal(rng.uniform(-3, 3), rng.uniform(0.5, 2.0), size=n)
            if rng.random() < 0.4:
                x = np.exp(x / 2)
            mine = shapiro_wilk(x)
            ref = sps.shapiro(x)
            assert abs(mine.statistic - ref.statistic) <= 1e-6
            assert abs(mine.p_value - ref.pvalue) <= 1e-4

    def test_small_sample_statistic_range(self):
        r = shapiro_wilk([1, 2, 3, 4, 5])
        assert 0.95 <= r.statistic <= 1.0
        assert r.p_value > 0.5

    def test_errors(self):
        with pytest.raises(SampleSizeError):
            shapiro_wilk([1.0, 2.0])
        with pytest.raises(DegenerateSampleError):
            shapiro_wilk([2.0, 2.0, 2.0, 2.0])

    def test_rejects_uniform_tail_at_large_n(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 1, size=500)
        assert shapiro_wilk(x).reject_null


class TestPairedT:
    def test_fixture_from_hand_arithmetic(self):
        r = paired_t([1, 2, 3], [2, 4, 5])
        assert abs(r.statistic - (-5.0)) <= 1e-9
        assert abs(r.p_value - 0.0377) <= 1e-3
        assert r.n == 3

    def test_oracle_agreement(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            n = int(rng.integers(3, 31))
            a = rng.normal(0, 1, n)
            b = a + rng.normal(0.3, 0.7, n)
            mine = paired_t(a, b)
            ref = sps.ttest_rel(a, b)
            assert abs(mine.statistic - ref.statistic) <= 1e-6
            assert abs(mine.p_value - ref.pvalue) <= 1e-4

    def test_constant_shift_is_degenerate(self):
        with pytest.raises(DegenerateSampleError):
            paired_t([1.0, 2.0, 3.0], [2.0, 3.0, 4.0])

    def test_symmetric_noise_gives_p_near_one(self):
        a = np.arange(10, dtype=float)
        eps = 1e-3 * np.array([1, -1] * 5, dtype=float)
        r = paired_t(a + eps, a)
        assert abs(r.statistic) <= 1e-6
        assert r.p_value > 0.999

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            paired_t([1, 2, 3], [1, 2])


class TestWilcoxon:
    def test_all_positive_small_sample(self):
        r = wilcoxon_signed_rank([3, 3, 3], [1, 1, 1])
        assert r.statistic == 0.0
        assert abs(r.p_value - 0.25) < 1e-12  # 2 of the 8 sign patterns

    def test_exact_path_matches_bruteforce_distribution(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            n = int(rng.integers(3, WILCOXON_EXACT_MAX_N + 1))
            d = rng.normal(0.2, 1.0, size=n)
            d[d == 0] = 0.1
            a = np.arange(n, dtype=float)
            mine = wilcoxon_signed_rank(a + d, a)
            # independent brute force over all sign patterns
            from itertools import product

            ranks = sps.rankdata(np.abs(d))
            total = ranks.sum()
            count = 0
            for signs in product([0, 1], repeat=n):
                wp = sum(r for s, r in zip(signs, ranks) if s)
                if min(wp, total - wp) <= mine.statistic + 1e-9:
                    count += 1
            assert mine.p_value == pytest.approx(count / 2**n, abs=1e-12)

    def test_oracle_agreement(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            n = int(rng.integers(3, 31))
            a = rng.normal(0, 1, n)
            b = a + rng.normal(0.4, 1.0, n)
            d = a - b
            nn = int(np.count_nonzero(d))
            if nn < 1:
                continue
            mine = wilcoxon_signed_rank(a, b)
            method = "exact" if nn <= WILCOXON_EXACT_MAX_N else "approx"
            ref = _scipy_wilcoxon(a, b, method)
            assert abs(mine.statistic - ref.statistic) <= 1e-6
            assert abs(mine.p_value - ref.pvalue) <= 1e-4

    def test_swap_symmetry(self):
        rng = np.random.default_rng(15)
        a = rng.normal(0, 1, 9)
        b = a + rng.normal(0.5, 1, 9)
        r1 = wilcoxon_signed_rank(a, b)
        r2 = wilcoxon_signed_rank(b, a)
        assert r1.statistic == r2.statistic
        assert r1.p_value == r2.p_value

    def test_all_zero_differences(self):
        with pytest.raises(DegenerateSampleError):
            wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])


def test_reject_flag_uses_alpha():
    r = paired_t([1, 2, 3], [2, 4, 5], alpha=0.05)
    assert r.reject_null
    r = paired_t([1, 2, 3], [2, 4, 5], alpha=0.01)
    assert not r.reject_null
