"""Binomial intervals, percentile bootstrap and the two-sided Fisher exact test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from statistics import NormalDist
from typing import Callable, Sequence

import numpy as np

from driftmon.model import DriftmonError


class IntervalMethod(str, Enum):
    WILSON = "WILSON"
    CLOPPER_PEARSON = "CLOPPER_PEARSON"
    BOOTSTRAP = "BOOTSTRAP"


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    method: IntervalMethod
    confidence: float = 0.95

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0) and self.method is not IntervalMethod.BOOTSTRAP:
            raise ValueError(f"bad interval [{self.lower}, {self.upper}]")

    def as_percent(self, digits: int = 1) -> tuple[float, float]:
        return round(self.lower * 100, digits), round(self.upper * 100, digits)

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "method": self.method.value,
            "confidence": self.confidence,
        }


def _check(k: int, n: int, confidence: float) -> None:
    if not (isinstance(k, int) and isinstance(n, int)) or n < 1 or k < 0 or k > n:
        raise DriftmonError("INVALID_COUNTS", f"k={k}, n={n}")
    if not (0.0 < confidence < 1.0):
        raise DriftmonError("INVALID_CONFIDENCE", str(confidence))


def _z(confidence: float) -> float:
    return NormalDist().inv_cdf(1.0 - (1.0 - confidence) / 2.0)


def wilson_ci(k: int, n: int, confidence: float = 0.95) -> Interval:
    """Wilson score interval for k successes out of n."""
    _check(k, n, confidence)
    z = _z(confidence)
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lower = 0.0 if k == 0 else max(0.0, centre - half)
    upper = 1.0 if k == n else min(1.0, centre + half)
    return Interval(lower, upper, IntervalMethod.WILSON, confidence)


# -- regularized incomplete beta -------------------------------------------


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b), modified Lentz."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, 10000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def beta_ppf(q: float, a: float, b: float, tol: float = 1e-12) -> float:
    """Inverse of I_x(a, b) by bisection."""
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if betainc(a, b, mid) < q:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def clopper_pearson_ci(k: int, n: int, confidence: float = 0.95) -> Interval:
    """Exact binomial interval from Beta quantiles."""
    _check(k, n, confidence)
    alpha = 1.0 - confidence
    if k == 0:
        lower = 0.0
        upper = 1.0 - (alpha / 2.0) ** (1.0 / n)
    elif k == n:
        lower = (alpha / 2.0) ** (1.0 / n)
        upper = 1.0
    else:
        lower = beta_ppf(alpha / 2.0, k, n - k + 1)
        upper = beta_ppf(1.0 - alpha / 2.0, k + 1, n - k)
    return Interval(lower, upper, IntervalMethod.CLOPPER_PEARSON, confidence)


def bootstrap_ci(
    samples: Sequence[float],
    statistic: Callable[[np.ndarray], float] = np.mean,
    B: int = 10_000,
    confidence: float = 0.95,
    seed: int = 0,
) -> Interval:
    """Percentile bootstrap interval.

    The resample index matrix comes from one seeded generator, so the
    result depends only on (samples, B, confidence, seed).
    """
    data = np.asarray(samples, dtype=float)
    if data.size == 0:
        raise DriftmonError("EMPTY_SAMPLES")
    if B < 1:
        raise DriftmonError("INVALID_RESAMPLES", str(B))
    if not (0.0 < confidence < 1.0):
        raise DriftmonError("INVALID_CONFIDENCE", str(confidence))
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, data.size, size=(B, data.size))
    if statistic in (np.mean, np.median):
        stats = statistic(data[idx], axis=1)
    else:
        stats = np.array([statistic(data[row]) for row in idx], dtype=float)
    alpha = 1.0 - confidence
    lower, upper = np.quantile(stats, [alpha / 2.0, 1.0 - alpha / 2.0])
    return Interval(float(lower), float(upper), IntervalMethod.BOOTSTRAP, confidence)


def _log_hypergeom(a: int, row1: int, row2: int, col1: int) -> float:
    def log_comb(n, r):
        return math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)

    return log_comb(row1, a) + log_comb(row2, col1 - a) - log_comb(row1 + row2, col1)


def fisher_exact(a: int, b: int, c: int, d: int) -> float:
    """Two-sided p-value for the 2x2 table [[a, b], [c, d]].

    Sums the probabilities of every table with the same margins whose
    probability does not exceed that of the observed table.
    """
    if min(a, b, c, d) < 0:
        raise DriftmonError("INVALID_COUNTS", str((a, b, c, d)))
    row1, row2, col1 = a + b, c + d, a + c
    if row1 == 0 or row2 == 0:
        raise DriftmonError("DEGENERATE_TABLE", str((a, b, c, d)))
    lo, hi = max(0, col1 - row2), min(row1, col1)
    observed = _log_hypergeom(a, row1, row2, col1)
    cutoff = observed + 1e-7  # relative slack for ties under rounding
    logs = [_log_hypergeom(x, row1, row2, col1) for x in range(lo, hi + 1)]
    top = max(logs)
    weights = [math.exp(lp - top) for lp in logs]
    kept = [w for w, lp in zip(weights, logs) if lp <= cutoff]
    if len(kept) == len(weights):
        return 1.0
    return min(1.0, sum(kept) / sum(weights))
