"""Poisson point processes on intervals and circles, with local modifications.

The three modification schemes (delete everything; add two points when empty;
add a point to small configurations, delete one from large) come with their
exact likelihood ratios relative to the unmodified process.  The ratios can
be checked against a Bernoulli-slot discretization: put a point in each of n
slots independently with probability alpha/n and compare the count law with
the Poisson law as n grows.

Likelihood-ratio conventions.  For the two "add" schemes the returned density
is d(modified law)/d(original law) evaluated at the *input* configuration,
which is the factor that appears when bounding expectations.  The add-or-
delete ratio at a k-point configuration collects every route producing k
points, so at k = 1 it is 1/(alpha t) + alpha t / 2 (added-from-empty and
deleted-from-two routes both contribute); the per-route leading terms alone
do not satisfy the change-of-variables identity.  The delete-all scheme
returns the density at the modified (empty) configuration, e^{alpha t},
which also bounds the ratio everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps

from .stats import Estimate, mean_estimate


class DegenerateRateError(ValueError):
    """Raised when a modification scheme needs alpha * t > 0."""


@dataclass(frozen=True)
class Carrier:
    """An interval [a, b], or a circle of circumference b - a ([a, b) wrapped)."""

    a: float
    b: float
    circle: bool = False

    def __post_init__(self):
        if self.b <= self.a:
            raise ValueError(f"empty carrier [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a

    def contains(self, t: float) -> bool:
        if self.circle:
            return self.a <= t < self.b
        return self.a <= t <= self.b

    @staticmethod
    def interval(a: float, b: float) -> "Carrier":
        return Carrier(a, b, circle=False)

    @staticmethod
    def circle_of(r: float) -> "Carrier":
        return Carrier(-r / 2.0, r / 2.0, circle=True)


@dataclass(frozen=True)
class PointSet:
    """A finite, strictly increasing set of times in a carrier."""

    carrier: Carrier
    points: tuple

    def __post_init__(self):
        pts = self.points
        for t in pts:
            if not self.carrier.contains(t):
                raise ValueError(f"point {t} outside carrier")
        if any(pts[i] >= pts[i + 1] for i in range(len(pts) - 1)):
            raise ValueError("points must be strictly increasing")

    def __len__(self) -> int:
        return len(self.points)

    @staticmethod
    def empty(carrier: Carrier) -> "PointSet":
        return PointSet(carrier, ())

    @staticmethod
    def of(carrier: Carrier, times: Sequence[float]) -> "PointSet":
        return PointSet(carrier, tuple(sorted(float(t) for t in times)))


@dataclass(frozen=True)
class IntensityProfile:
    """Piecewise-constant nonnegative rate over a carrier.

    ``pieces`` are (start, end, rate) with the starts increasing and the
    pieces tiling the carrier.
    """

    carrier: Carrier
    pieces: tuple

    def __post_init__(self):
        lo = self.carrier.a
        for (a, b, rate) in self.pieces:
            if rate < 0:
                raise ValueError(f"negative rate {rate}")
            if not math.isclose(a, lo, abs_tol=1e-12):
                raise ValueError("pieces must tile the carrier")
            if b <= a:
                raise ValueError("empty piece")
            lo = b
        if not math.isclose(lo, self.carrier.b, abs_tol=1e-12):
            raise ValueError("pieces must cover the carrier")

    @staticmethod
    def constant(carrier: Carrier, rate: float) -> "IntensityProfile":
        return IntensityProfile(carrier, ((carrier.a, carrier.b, float(rate)),))

    @property
    def total_mass(self) -> float:
        return sum((b - a) * rate for (a, b, rate) in self.pieces)


_MAX_RESAMPLE = 1000


def sample(profile: IntensityProfile, rng: np.random.Generator) -> PointSet:
    """Draw an inhomogeneous Poisson point set; coincident times are resampled."""
    for _ in range(_MAX_RESAMPLE):
        times: list[float] = []
        for (a, b, rate) in profile.pieces:
            count = rng.poisson(rate * (b - a))
            if count:
                times.extend(rng.uniform(a, b, size=count))
        times.sort()
        if all(times[i] < times[i + 1] for i in range(len(times) - 1)):
            return PointSet(profile.carrier, tuple(times))
    raise RuntimeError("could not draw distinct event times")


def sample_constant(carrier: Carrier, rate: float, rng: np.random.Generator) -> PointSet:
    return sample(IntensityProfile.constant(carrier, rate), rng)


def sample_count_conditioned_even(length: float, rate: float, rng: np.random.Generator,
                                  budget: int = 10000) -> int:
    """Poisson(rate * length) count conditioned to be even, by rejection."""
    for _ in range(budget):
        k = int(rng.poisson(rate * length))
        if k % 2 == 0:
            return k
    raise RuntimeError("rejection budget exceeded for even-count conditioning")


# -- local modification schemes -------------------------------------------

def delete_all_density(x: PointSet, alpha: float, t: float) -> float:
    """Exact likelihood ratio of the deleted law at configuration x."""
    return math.exp(alpha * t) if len(x) == 0 else 0.0


def rn_delete_all(x: PointSet, alpha: float, t: float) -> tuple[PointSet, float]:
    """Delete every point.  Returns the density e^{alpha t} at the modified
    (empty) configuration, which also bounds the ratio everywhere."""
    return PointSet.empty(x.carrier), math.exp(alpha * t)


def add_two_if_empty_density(x: PointSet, alpha: float, t: float) -> float:
    if alpha * t <= 0:
        raise DegenerateRateError("add-two-if-empty needs alpha * t > 0")
    k = len(x)
    return (1.0 if k > 0 else 0.0) + (2.0 / (alpha * t) ** 2 if k == 2 else 0.0)


def rn_add_two_if_empty(x: PointSet, alpha: float, t: float,
                        rng: np.random.Generator) -> tuple[PointSet, float]:
    """Add two uniform points when x is empty, else keep x.

    The returned density is the likelihood ratio at the input configuration;
    it is bounded by 1 + 2/(alpha t)^2.
    """
    density = add_two_if_empty_density(x, alpha, t)
    if len(x) == 0:
        lo = x.carrier.a
        pts = np.sort(rng.uniform(lo, lo + t, size=2))
        while pts[0] == pts[1]:
            pts = np.sort(rng.uniform(lo, lo + t, size=2))
        return PointSet.of(x.carrier, pts), density
    return x, density


def add_or_delete_density(x: PointSet, alpha: float, t: float) -> float:
    if alpha * t <= 0:
        raise DegenerateRateError("add-or-delete needs alpha * t > 0")
    k = len(x)
    at = alpha * t
    density = 0.0
    if k == 1:
        density += 1.0 / at
    if k == 2:
        density += 2.0 / at
    if k >= 1:
        density += at / (k + 1)
    return density


def rn_add_or_delete(x: PointSet, alpha: float, t: float,
                     rng: np.random.Generator) -> tuple[PointSet, float]:
    """Add a uniform point when |x| <= 1, delete a uniform point when |x| >= 2.

    The returned density is the likelihood ratio at the input configuration;
    it is bounded by 2/(alpha t) + alpha t.
    """
    density = add_or_delete_density(x, alpha, t)
    if len(x) <= 1:
        lo = x.carrier.a
        while True:
            p = float(rng.uniform(lo, lo + t))
            if p not in x.points:
                break
        modified = PointSet.of(x.carrier, x.points + (p,))
    else:
        drop = int(rng.integers(len(x)))
        modified = PointSet(x.carrier, x.points[:drop] + x.points[drop + 1:])
    return modified, density


SCHEMES = {
    "delete-all": (lambda x, a, t, rng: (PointSet.empty(x.carrier), delete_all_density(x, a, t)),
                   delete_all_density,
                   lambda a, t: math.exp(a * t),
                   lambda x: len(x) == 0),
    "add-two-if-empty": (rn_add_two_if_empty,
                         add_two_if_empty_density,
                         lambda a, t: 1.0 + 2.0 / (a * t) ** 2,
                         lambda x: len(x) > 0),
    "add-or-delete": (rn_add_or_delete,
                      add_or_delete_density,
                      lambda a, t: 2.0 / (a * t) + a * t,
                      lambda x: len(x) > 0),
}


@dataclass(frozen=True)
class ModificationReport:
    """Both sides of E[f(X)] <= c1 c2 E[f(X) 1_A(X)], with standard errors."""

    scheme: str
    c1: float
    c2: float
    lhs: Estimate
    rhs: Estimate
    holds_within: float

    @property
    def holds(self) -> bool:
        return self.holds_within <= 3.0


def verify_modification_identity(f: Callable[[PointSet], float], scheme: str,
                                 alpha: float, t: float, n_samples: int,
                                 rng: np.random.Generator,
                                 c1: float | None = None) -> ModificationReport:
    """Monte Carlo check of the modification bound for a functional f >= 0.

    c1 must bound f(X)/f(modified X); when omitted it is measured empirically
    over the joint draws (and reported, so the check is self-describing).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    modify, _, c2_of, in_a = SCHEMES[scheme]
    carrier = Carrier.interval(0.0, t)
    c2 = c2_of(alpha, t)

    f_x = np.empty(n_samples)
    f_x_ind = np.empty(n_samples)
    ratio_max = 0.0
    for i in range(n_samples):
        x = sample_constant(carrier, alpha, rng)
        modified, _ = modify(x, alpha, t, rng)
        fx = f(x)
        fm = f(modified)
        f_x[i] = fx
        f_x_ind[i] = fx if in_a(x) else 0.0
        if fm > 0:
            ratio_max = max(ratio_max, fx / fm)
        elif fx > 0:
            ratio_max = math.inf
    if c1 is None:
        c1 = ratio_max if ratio_max > 0 else 1.0

    lhs = mean_estimate(f_x)
    rhs_raw = mean_estimate(f_x_ind)
    rhs = Estimate(c1 * c2 * rhs_raw.value, c1 * c2 * rhs_raw.stderr, rhs_raw.n)
    gap = lhs.value - rhs.value
    se = math.hypot(lhs.stderr, rhs.stderr)
    holds_within = 0.0 if gap <= 0 else (gap / se if se > 0 else math.inf)
    return ModificationReport(scheme, c1, c2, lhs, rhs, holds_within)


# -- Bernoulli-slot discretization -----------------------------------------

def bernoulli_count_tv_distance(alpha: float, t: float, n: int) -> float:
    """Total-variation distance between the slot-count law and Poisson(alpha t).

    Slots sit at 0, 1/n, ..., floor(t n)/n and each succeeds with probability
    alpha/n, so the count is Binomial(floor(t n) + 1, alpha/n).
    """
    m = int(math.floor(t * n)) + 1
    p = alpha / n
    if not (0 <= p <= 1):
        raise ValueError("need alpha <= n")
    k = np.arange(0, max(4 * m, 64))
    binom = sps.binom.pmf(k[: m + 1], m, p)
    pois = sps.poisson.pmf(k, alpha * t)
    tv = 0.5 * (np.abs(binom - pois[: m + 1]).sum() + pois[m + 1:].sum())
    return float(tv)
