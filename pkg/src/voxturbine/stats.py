"""Two-sample statistics for campaign comparisons.

Implements Welch's unequal-variance t-test from summary statistics, the form
needed when comparing evaluation counts of two experiment arms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.special import betainc


@dataclass(frozen=True)
class StatsSummary:
    """Sample mean, standard deviation, and size of one arm."""

    mean: float
    sd: float
    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if self.sd < 0:
            raise ValueError(f"sd must be >= 0, got {self.sd}")


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p_two_tailed: float


def summarize(samples: Sequence[float]) -> StatsSummary:
    """Summary with the sample (n-1 denominator) standard deviation."""
    n = len(samples)
    if n < 2:
        raise ValueError("need at least two samples")
    mean = sum(samples) / n
    var = sum((s - mean) ** 2 for s in samples) / (n - 1)
    return StatsSummary(mean=mean, sd=math.sqrt(var), n=n)


def welch_t_test(a: StatsSummary, b: StatsSummary) -> WelchResult:
    """Welch's two-sample t-test from summaries.

    t = (Ma - Mb) / sqrt(SDa^2/Na + SDb^2/Nb), degrees of freedom by
    Welch-Satterthwaite, and the two-tailed p-value via the regularized
    incomplete beta function I_x(df/2, 1/2) with x = df/(df + t^2).

    When both variances are zero the formula degenerates: equal means give
    t = 0 and p = 1, unequal means give an infinite t and p = 0. The
    Welch-Satterthwaite expression is 0/0 there, so df falls back to
    n_a + n_b - 2.
    """
    var_a = a.sd**2 / a.n
    var_b = b.sd**2 / b.n
    pooled = var_a + var_b
    if pooled == 0.0:
        df = float(a.n + b.n - 2)
        if a.mean == b.mean:
            return WelchResult(t=0.0, df=df, p_two_tailed=1.0)
        t = math.inf if a.mean > b.mean else -math.inf
        return WelchResult(t=t, df=df, p_two_tailed=0.0)
    t = (a.mean - b.mean) / math.sqrt(pooled)
    df = pooled**2 / (var_a**2 / (a.n - 1) + var_b**2 / (b.n - 1))
    if t == 0.0:
        p = 1.0
    else:
        p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return WelchResult(t=t, df=df, p_two_tailed=p)
