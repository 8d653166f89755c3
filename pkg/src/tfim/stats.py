"""Streaming moments, chain merging, and error estimates for ratio estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class RunningMoments:
    """Streaming mean/variance (Welford), mergeable across chains.

    Merging two accumulators gives exactly the pooled-sample moments, which is
    what makes parallel chains reproducible independently of scheduling.
    """

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def push(self, x: float) -> None:
        self.n += 1
        d = x - self.mean
        self.mean += d / self.n
        self.m2 += d * (x - self.mean)

    def push_many(self, xs) -> None:
        xs = np.asarray(xs, dtype=float)
        if xs.size == 0:
            return
        n_b = xs.size
        mean_b = float(xs.mean())
        m2_b = float(((xs - mean_b) ** 2).sum())
        self.merge(RunningMoments(n_b, mean_b, m2_b))

    def merge(self, other: "RunningMoments") -> None:
        if other.n == 0:
            return
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, other.mean, other.m2
            return
        n = self.n + other.n
        d = other.mean - self.mean
        self.mean += d * other.n / n
        self.m2 += other.m2 + d * d * self.n * other.n / n
        self.n = n

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n > 1 else float("nan")

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.n) if self.n > 1 else float("nan")


@dataclass(frozen=True)
class Estimate:
    """A point estimate with a standard error and bookkeeping fields."""

    value: float
    stderr: float
    n: int
    ess: float = float("nan")
    warnings: tuple = ()

    def agrees_with(self, other: "Estimate | float", n_se: float = 3.0) -> bool:
        if isinstance(other, Estimate):
            se = math.hypot(self.stderr, other.stderr)
            return abs(self.value - other.value) <= n_se * se
        return abs(self.value - other) <= n_se * self.stderr


def mean_estimate(xs) -> Estimate:
    xs = np.asarray(xs, dtype=float)
    m = RunningMoments()
    m.push_many(xs)
    return Estimate(m.mean, m.stderr, m.n)


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=float)
    s = w.sum()
    s2 = (w * w).sum()
    return float(s * s / s2) if s2 > 0 else 0.0


def ratio_estimate_jackknife(num, den, ess_warn: float = 100.0) -> Estimate:
    """Delete-one jackknife for a ratio mean(num)/mean(den) on a shared pool."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    n = num.size
    s_num, s_den = num.sum(), den.sum()
    if s_den == 0:
        raise ZeroDivisionError("ratio estimate with all-zero denominator")
    theta = s_num / s_den
    loo = (s_num - num) / (s_den - den)
    theta_j = loo.mean()
    var = (n - 1) / n * ((loo - theta_j) ** 2).sum()
    ess = effective_sample_size(np.abs(den))
    warnings = ("low-ess",) if ess < ess_warn else ()
    return Estimate(float(n * theta - (n - 1) * theta_j), math.sqrt(var), n, ess, warnings)


def ratio_estimate_independent(num, den, ess_warn: float = 100.0) -> Estimate:
    """Delta-method SE for mean(num)/mean(den) from independent pools."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    nb, db = num.mean(), den.mean()
    if db == 0:
        raise ZeroDivisionError("ratio estimate with zero denominator mean")
    vn = num.var(ddof=1) / num.size if num.size > 1 else 0.0
    vd = den.var(ddof=1) / den.size if den.size > 1 else 0.0
    var = vn / db**2 + nb**2 * vd / db**4
    ess = effective_sample_size(np.abs(den))
    warnings = ("low-ess",) if ess < ess_warn else ()
    return Estimate(float(nb / db), math.sqrt(var), num.size, ess, warnings)


def product_estimate(a: Estimate, b: Estimate) -> Estimate:
    """Delta-method product of two independent estimates."""
    value = a.value * b.value
    var = (b.value * a.stderr) ** 2 + (a.value * b.stderr) ** 2
    return Estimate(value, math.sqrt(var), min(a.n, b.n))


def difference_estimate(a: Estimate, b: Estimate) -> Estimate:
    return Estimate(a.value - b.value, math.hypot(a.stderr, b.stderr), min(a.n, b.n))


@dataclass
class RatioAccumulator:
    """Mergeable sums for a ratio of means over a shared pool.

    Tracks first and second moments of (num, den) including their covariance,
    so chains can be merged exactly and the delta-method standard error of
    mean(num)/mean(den) computed from the pooled sums.
    """

    n: int = 0
    sum_num: float = 0.0
    sum_den: float = 0.0
    sum_num2: float = 0.0
    sum_den2: float = 0.0
    sum_cross: float = 0.0

    def push_many(self, num, den) -> None:
        num = np.asarray(num, dtype=float)
        den = np.asarray(den, dtype=float)
        self.n += num.size
        self.sum_num += float(num.sum())
        self.sum_den += float(den.sum())
        self.sum_num2 += float((num * num).sum())
        self.sum_den2 += float((den * den).sum())
        self.sum_cross += float((num * den).sum())

    def merge(self, other: "RatioAccumulator") -> None:
        self.n += other.n
        self.sum_num += other.sum_num
        self.sum_den += other.sum_den
        self.sum_num2 += other.sum_num2
        self.sum_den2 += other.sum_den2
        self.sum_cross += other.sum_cross

    def estimate(self, ess_warn: float = 100.0) -> Estimate:
        if self.n < 2 or self.sum_den == 0:
            raise ZeroDivisionError("ratio accumulator needs data and nonzero denominator")
        n = self.n
        mn, md = self.sum_num / n, self.sum_den / n
        vn = (self.sum_num2 / n - mn * mn) / n
        vd = (self.sum_den2 / n - md * md) / n
        cv = (self.sum_cross / n - mn * md) / n
        var = vn / md**2 + mn**2 * vd / md**4 - 2.0 * mn * cv / md**3
        ess = self.sum_den**2 / self.sum_den2 if self.sum_den2 > 0 else 0.0
        warnings = ("low-ess",) if ess < ess_warn else ()
        return Estimate(mn / md, math.sqrt(max(var, 0.0)), n, ess, warnings)


def batch_means_estimate(xs, n_batches: int = 32) -> Estimate:
    """Mean with an autocorrelation-robust SE from batch means (for MCMC)."""
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    if n < 2 * n_batches:
        return mean_estimate(xs)
    b = n // n_batches
    batches = xs[: b * n_batches].reshape(n_batches, b).mean(axis=1)
    se = batches.std(ddof=1) / math.sqrt(n_batches)
    return Estimate(float(xs.mean()), float(se), n)
