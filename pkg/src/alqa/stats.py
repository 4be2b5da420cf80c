"""Significance tests implemented from first principles.

Three tests back the learning-curve comparison workflow: Shapiro-Wilk
normality (the AS R94 approximation with Royston's coefficients), the
paired two-sided t-test, and the Wilcoxon signed-rank test with an exact
enumeration path for small samples. scipy.special supplies only scalar
special functions (normal quantile, incomplete beta); the test logic and
p-value machinery live here so an external statistics package can serve
as an independent oracle in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import betainc, ndtri

from alqa.errors import ContractError, DegenerateSampleError, SampleSizeError

WILCOXON_EXACT_MAX_N = 12


class StatTest(Enum):
    SHAPIRO_WILK = "shapiro_wilk"
    PAIRED_T = "paired_t"
    WILCOXON_SIGNED_RANK = "wilcoxon_signed_rank"


@dataclass(frozen=True)
class StatTestResult:
    test: StatTest
    statistic: float
    p_value: float
    n: int
    alpha: float
    reject_null: bool

    def to_dict(self) -> dict:
        return {
            "test": self.test.value,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n": self.n,
            "alpha": self.alpha,
            "reject_null": self.reject_null,
        }


def _result(test: StatTest, statistic: float, p: float, n: int, alpha: float) -> StatTestResult:
    p = min(max(p, 0.0), 1.0)
    return StatTestResult(
        test=test, statistic=float(statistic), p_value=float(p), n=n, alpha=alpha,
        reject_null=bool(p < alpha),
    )


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


# Royston's polynomial coefficients for the W statistic and its p-value,
# evaluated lowest order first (constant term at index 0).
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.5440, -0.39978, 0.025054, -0.0006714)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)


def _poly(coeffs, x: float) -> float:
    return sum(c * x**i for i, c in enumerate(coeffs))


def shapiro_wilk(sample, alpha: float = 0.05) -> StatTestResult:
    """Shapiro-Wilk W and its p-value for 3 <= n <= 5000 observations."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = x.size
    if n < 3:
        raise SampleSizeError(f"shapiro_wilk needs n >= 3, got {n}")
    if n > 5000:
        raise SampleSizeError(f"shapiro_wilk supports n <= 5000, got {n}")
    if x[-1] == x[0]:
        raise DegenerateSampleError("sample has zero variance")

    m = ndtri((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    ssq = float(m @ m)
    a = np.empty(n, dtype=np.float64)
    if n == 3:
        a[0], a[1], a[2] = -math.sqrt(0.5), 0.0, math.sqrt(0.5)
    else:
        u = 1.0 / math.sqrt(n)
        an = m[-1] / math.sqrt(ssq) + _poly(_C1, u)
        if n > 5:
            an1 = m[-2] / math.sqrt(ssq) + _poly(_C2, u)
            phi = (ssq - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
                1.0 - 2.0 * an**2 - 2.0 * an1**2
            )
            a[2 : n - 2] = m[2 : n - 2] / math.sqrt(phi)
            a[-1], a[-2], a[0], a[1] = an, an1, -an, -an1
        else:
            phi = (ssq - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * an**2)
            a[1 : n - 1] = m[1 : n - 1] / math.sqrt(phi)
            a[-1], a[0] = an, -an

    centered = x - x.mean()
    denom = float(centered @ centered)
    w = float((a @ x) ** 2 / denom)
    w = min(w, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
    else:
        one_minus = max(1.0 - w, 1e-300)
        if n <= 11:
            g = -2.273 + 0.459 * n
            z_in = -math.log(g - math.log(one_minus))
            mu = _poly(_C3, float(n))
            sigma = math.exp(_poly(_C4, float(n)))
        else:
            ln_n = math.log(n)
            z_in = math.log(one_minus)
            mu = _poly(_C5, ln_n)
            sigma = math.exp(_poly(_C6, ln_n))
        p = 1.0 - _norm_cdf((z_in - mu) / sigma)
    return _result(StatTest.SHAPIRO_WILK, w, p, n, alpha)


def paired_t(a, b, alpha: float = 0.05) -> StatTestResult:
    """Two-sided paired t-test on the differences a - b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError(f"paired samples must be equal-length 1-D, got {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise SampleSizeError(f"paired_t needs n >= 2, got {n}")
    d = a - b
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise DegenerateSampleError("differences have zero variance")
    t = float(d.mean() / (sd / math.sqrt(n)))
    df = n - 1
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return _result(StatTest.PAIRED_T, t, p, n, alpha)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def wilcoxon_signed_rank(a, b, alpha: float = 0.05) -> StatTestResult:
    """Wilcoxon signed-rank test; W = min(rank sum above, rank sum below).

    Zero differences are discarded. For n <= 12 the two-sided p-value comes
    from enumerating every sign assignment over the observed ranks; larger
    samples use the tie-corrected normal approximation without continuity
    correction.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError(f"paired samples must be equal-length 1-D, got {a.shape} vs {b.shape}")
    d = a - b
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        raise DegenerateSampleError("all paired differences are zero")

    ranks = _average_ranks(np.abs(d))
    w_pos = float(ranks[d > 0].sum())
    w_neg = float(ranks[d < 0].sum())
    w = min(w_pos, w_neg)

    if n <= WILCOXON_EXACT_MAX_N:
        masks = np.arange(2**n, dtype=np.uint32)
        bits = (masks[:, None] >> np.arange(n)) & 1
        plus = bits.astype(np.float64) @ ranks
        total = float(ranks.sum())
        stat = np.minimum(plus, total - plus)
        p = float(np.mean(stat <= w + 1e-9))
    else:
        mn = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0
        _, counts = np.unique(np.abs(d), return_counts=True)
        var -= float(((counts**3 - counts) / 48.0).sum())
        z = (w - mn) / math.sqrt(var)
        p = 2.0 * (1.0 - _norm_cdf(abs(z)))
    return _result(StatTest.WILCOXON_SIGNED_RANK, w, p, n, alpha)
