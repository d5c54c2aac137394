import time

import numpy as np
import pytest
from scipy import stats as sps

from driftmon.model import DriftmonError
from driftmon.stats import (
    IntervalMethod,
    betainc,
    beta_ppf,
    bootstrap_ci,
    clopper_pearson_ci,
    fisher_exact,
    wilson_ci,
)


def wilson_reference(k, n, conf=0.95):
    z = sps.norm.ppf(1 - (1 - conf) / 2)
    p = k / n
    centre = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
    return max(0.0, centre - half), min(1.0, centre + half)


class TestWilson:
    @pytest.mark.parametrize(
        "k, n, expected",
        [(0, 599, (0.0, 0.6)), (0, 49, (0.0, 7.3)), (0, 300, (0.0, 1.3)), (0, 250, (0.0, 1.5))],
    )
    def test_reported_values(self, k, n, expected):
        assert wilson_ci(k, n).as_percent() == expected

    def test_all_successes(self):
        assert wilson_ci(37, 37).upper == 1.0

    def test_reference_grid(self):
        for n in (1, 2, 7, 30, 99):
            for k in range(n + 1):
                iv = wilson_ci(k, n, 0.9)
                lo, hi = wilson_reference(k, n, 0.9)
                assert iv.lower == pytest.approx(lo, abs=1e-12)
                assert iv.upper == pytest.approx(hi, abs=1e-12)

    @pytest.mark.parametrize("k, n", [(-1, 5), (6, 5), (0, 0)])
    def test_invalid_counts(self, k, n):
        with pytest.raises(DriftmonError) as exc:
            wilson_ci(k, n)
        assert exc.value.code == "INVALID_COUNTS"

    @pytest.mark.parametrize("conf", [0.0, 1.0, 1.5])
    def test_invalid_confidence(self, conf):
        with pytest.raises(DriftmonError) as exc:
            wilson_ci(1, 5, conf)
        assert exc.value.code == "INVALID_CONFIDENCE"


class TestClopperPearson:
    @pytest.mark.parametrize("k, n, expected", [(0, 599, (0.0, 0.6)), (0, 300, (0.0, 1.2)), (0, 250, (0.0, 1.5))])
    def test_reported_values(self, k, n, expected):
        assert clopper_pearson_ci(k, n).as_percent() == expected

    def test_single_trial(self):
        iv = clopper_pearson_ci(0, 1)
        assert iv.lower == 0.0
        assert iv.upper == pytest.approx(0.975, abs=1e-12)

    def test_zero_successes_closed_form(self):
        for n in (1, 5, 49, 300, 599, 1000):
            assert clopper_pearson_ci(0, n).upper == pytest.approx(1 - 0.025 ** (1 / n), abs=1e-12)

    def test_against_scipy(self):
        for n in (3, 20, 57):
            for k in range(n + 1):
                iv = clopper_pearson_ci(k, n)
                lo = 0.0 if k == 0 else sps.beta.ppf(0.025, k, n - k + 1)
                hi = 1.0 if k == n else sps.beta.ppf(0.975, k + 1, n - k)
                assert iv.lower == pytest.approx(lo, abs=1e-9)
                assert iv.upper == pytest.approx(hi, abs=1e-9)

    def test_incomplete_beta(self):
        for a, b, x in [(0.5, 0.5, 0.3), (2, 5, 0.1), (30, 4, 0.9), (1, 600, 0.004)]:
            assert betainc(a, b, x) == pytest.approx(sps.beta.cdf(x, a, b), abs=1e-12)
            assert beta_ppf(0.3, a, b) == pytest.approx(sps.beta.ppf(0.3, a, b), abs=1e-10)


class TestContainment:
    def test_point_estimate_inside(self):
        for n in range(1, 101):
            for k in range(n + 1):
                p = k / n
                for iv in (wilson_ci(k, n), clopper_pearson_ci(k, n)):
                    assert iv.lower - 1e-12 <= p <= iv.upper + 1e-12

    def test_methods(self):
        assert wilson_ci(1, 2).method is IntervalMethod.WILSON
        assert clopper_pearson_ci(1, 2).method is IntervalMethod.CLOPPER_PEARSON


class TestBootstrap:
    def test_constant(self):
        iv = bootstrap_ci([1, 1, 1, 1], B=1000)
        assert (iv.lower, iv.upper) == (1.0, 1.0)

    def test_single_element(self):
        iv = bootstrap_ci([0.42], B=500, seed=3)
        assert (iv.lower, iv.upper) == (0.42, 0.42)

    def test_empty(self):
        with pytest.raises(DriftmonError) as exc:
            bootstrap_ci([])
        assert exc.value.code == "EMPTY_SAMPLES"

    def test_seeded(self):
        data = np.random.default_rng(1).normal(size=50)
        assert bootstrap_ci(data, B=2000, seed=9) == bootstrap_ci(data, B=2000, seed=9)
        assert bootstrap_ci(data, B=2000, seed=9) != bootstrap_ci(data, B=2000, seed=10)

    def test_custom_statistic_matches_vectorized(self):
        data = np.arange(20.0)
        fast = bootstrap_ci(data, np.mean, B=300, seed=2)
        slow = bootstrap_ci(data, lambda x: float(np.mean(x)), B=300, seed=2)
        assert fast.lower == pytest.approx(slow.lower)
        assert fast.upper == pytest.approx(slow.upper)

    def test_coverage_experiment(self):
        rng = np.random.default_rng(2024)
        hits = 0
        for trial in range(100):
            sample = rng.binomial(1, 0.5, size=200)
            iv = bootstrap_ci(sample, np.mean, B=10_000, seed=trial)
            hits += iv.lower <= 0.5 <= iv.upper
        assert hits >= 90


class TestFisher:
    def test_reported_values(self):
        start = time.perf_counter()
        assert fisher_exact(2, 18, 25, 7) < 1e-5
        assert fisher_exact(12, 8, 25, 7) == pytest.approx(0.213, abs=0.005)
        assert fisher_exact(16, 4, 25, 7) == pytest.approx(1.0, abs=0.005)
        assert time.perf_counter() - start < 1.0

    def test_identical_proportions(self):
        assert fisher_exact(5, 5, 5, 5) == 1.0

    def test_against_scipy(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            a, b, c, d = (int(x) for x in rng.integers(0, 30, size=4))
            if a + b == 0 or c + d == 0:
                continue
            ref = sps.fisher_exact([[a, b], [c, d]]).pvalue
            assert fisher_exact(a, b, c, d) == pytest.approx(ref, rel=1e-6, abs=1e-12)

    def test_swap_symmetry(self):
        for table in [(2, 18, 25, 7), (12, 8, 25, 7), (0, 3, 9, 1)]:
            a, b, c, d = table
            assert fisher_exact(a, b, c, d) == pytest.approx(fisher_exact(d, c, b, a))
            assert fisher_exact(a, b, c, d) == pytest.approx(fisher_exact(c, d, a, b))

    def test_degenerate(self):
        with pytest.raises(DriftmonError) as exc:
            fisher_exact(0, 0, 3, 4)
        assert exc.value.code == "DEGENERATE_TABLE"

    def test_negative_counts(self):
        with pytest.raises(DriftmonError):
            fisher_exact(-1, 2, 3, 4)
