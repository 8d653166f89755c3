"""Space-time spin representation: a-priori sampler, Gibbs reweighting,
and importance-sampling correlation estimators.

A configuration assigns each site a +-1 value at time zero and a finite set
of flip times; the trajectory is right-continuous and switches value exactly
at the flips.  Correlations are estimated by reweighting a-priori samples
with exp(lam * sum over edges of the pair-overlap integral); the weights are
handled in log space so large boxes do not overflow.  Importance sampling
from the a-priori measure degrades exponentially with space-time volume, so
a Suzuki-Trotter discretized Metropolis sampler is provided behind the same
estimator surface for the larger magnetization sweeps; it is approximate and
its time step is recorded in every result it produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import (Holes, SpaceTimeRegion, edge_windows, line_components)
from .stats import (Estimate, batch_means_estimate, mean_estimate,
                    ratio_estimate_jackknife)


class SamplingError(RuntimeError):
    """Raised when rejection sampling exhausts its budget."""


_REJECT_BUDGET = 10000


def _poisson_times(lo: float, hi: float, rate: float, rng: np.random.Generator) -> np.ndarray:
    n = rng.poisson(rate * (hi - lo))
    return np.sort(rng.uniform(lo, hi, size=n))


def _even_poisson_times(lo: float, hi: float, rate: float, rng: np.random.Generator) -> np.ndarray:
    for _ in range(_REJECT_BUDGET):
        times = _poisson_times(lo, hi, rate, rng)
        if times.size % 2 == 0:
            return times
    raise SamplingError(
        f"even-parity rejection budget exceeded (rate {rate}, length {hi - lo})")


@dataclass
class SpinConfiguration:
    """Per-site initial value at time 0 and sorted flip times."""

    region: SpaceTimeRegion
    initial: dict
    flips: dict

    def value(self, x, t: float) -> int:
        x = tuple(x)
        if x not in self.initial:
            # frozen exterior sites under the wired spatial condition
            return 1
        times = self.flips[x]
        if t >= 0:
            count = int(np.searchsorted(times, t, side="right") - np.searchsorted(times, 0.0, side="right"))
        else:
            count = int(np.searchsorted(times, 0.0, side="right") - np.searchsorted(times, t, side="right"))
        return self.initial[x] * (1 if count % 2 == 0 else -1)

    def product_over(self, points: Sequence) -> int:
        out = 1
        for (x, t) in points:
            out *= self.value(x, t)
        return out


def sample_apriori(region: SpaceTimeRegion, delta: float,
                   rng: np.random.Generator) -> SpinConfiguration:
    """Draw from the a-priori measure with the region's time boundary rule.

    Free time: unconstrained flips, fair initial signs.  Periodic time: flip
    counts conditioned even per site (acceptance at least 1/2 per site).
    Wired time: even flip counts and the initial sign chosen so both endpoint
    values are +1.
    """
    initial = {}
    flips = {}
    lo, hi = region.t_min, region.t_max
    for x in region.box.sites():
        if region.bc_time == "f":
            times = _poisson_times(lo, hi, delta, rng)
            init = 1 if rng.random() < 0.5 else -1
        elif region.bc_time == "p":
            times = _even_poisson_times(lo, hi, delta, rng)
            init = 1 if rng.random() < 0.5 else -1
        else:  # wired endpoints
            times = _even_poisson_times(lo, hi, delta, rng)
            below = int(np.searchsorted(times, 0.0, side="right"))
            init = 1 if below % 2 == 0 else -1
        initial[x] = init
        flips[x] = times
    return SpinConfiguration(region, initial, flips)


def overlap_integral(config: SpinConfiguration, x, y,
                     windows: Sequence | None = None) -> float:
    """int sigma(x,t) sigma(y,t) dt over the line (or the given windows)."""
    region = config.region
    if windows is None:
        windows = [(region.t_min, region.t_max)]
    x, y = tuple(x), tuple(y)
    tx = config.flips.get(x, np.empty(0))
    ty = config.flips.get(y, np.empty(0))
    total = 0.0
    for (lo, hi) in windows:
        breaks = [lo]
        for arr in (tx, ty):
            inside = arr[(arr > lo) & (arr < hi)]
            breaks.extend(inside.tolist())
        # windows may wrap past t_max on the circle
        if hi > region.t_max and region.time_topology == "circle":
            for arr in (tx, ty):
                inside = arr[(arr > region.t_min) & (arr < hi - region.r)]
                breaks.extend((inside + region.r).tolist())
        breaks.append(hi)
        breaks.sort()
        for i in range(len(breaks) - 1):
            a, b = breaks[i], breaks[i + 1]
            if b <= a:
                continue
            mid = (a + b) / 2.0
            base = mid if mid <= region.t_max else mid - region.r
            total += (b - a) * config.value(x, base) * config.value(y, base)
    return total


def gibbs_log_weight(config: SpinConfiguration, lam: float,
                     edges: Sequence) -> float:
    """lam times the summed overlap integrals (frozen sites read as +1)."""
    return lam * sum(overlap_integral(config, x, y) for (x, y) in edges)


def gibbs_weight(config: SpinConfiguration, lam: float, edges: Sequence) -> float:
    return math.exp(gibbs_log_weight(config, lam, edges))


def _weights_and_values(region, lam, delta, n_samples, rng, value_fn):
    edges = region.edge_set().edges
    logs = np.empty(n_samples)
    vals = np.empty(n_samples)
    for i in range(n_samples):
        config = sample_apriori(region, delta, rng)
        logs[i] = gibbs_log_weight(config, lam, edges)
        vals[i] = value_fn(config)
    w = np.exp(logs - logs.max())
    return w, vals


def estimate_correlation(points: Sequence, region: SpaceTimeRegion, lam: float,
                         delta: float, n_samples: int,
                         rng: np.random.Generator) -> Estimate:
    """Importance-sampling estimate of the correlation over the point set."""
    for (x, t) in points:
        if not region.contains_point((x, t)):
            raise ValueError(f"point {(x, t)} outside region")
        if region.time_topology == "interval" and abs(abs(t) - region.r / 2) < 1e-12:
            raise ValueError("correlation points must avoid the time endpoints")
    w, vals = _weights_and_values(region, lam, delta, n_samples, rng,
                                  lambda c: c.product_over(points))
    return ratio_estimate_jackknife(w * vals, w)


def estimate_magnetization(region: SpaceTimeRegion, lam: float, delta: float,
                           n_samples: int, rng: np.random.Generator) -> Estimate:
    """<sigma(0,0)> under wired conditions."""
    if region.bc_space != "w":
        raise ValueError("magnetization estimates use the wired spatial condition")
    origin = (0,) * region.box.d
    return estimate_correlation([(origin, 0.0)], region, lam, delta, n_samples, rng)


def restricted_overlap_sum(config: SpinConfiguration, holes: Holes,
                           edges: Sequence) -> float:
    """Sum over edges of the overlap integral restricted to the hole shadow
    (windows where at least one endpoint lies in the holes)."""
    region = config.region
    total = 0.0
    for (x, y) in edges:
        full = overlap_integral(config, x, y)
        outside = overlap_integral(config, x, y,
                                   edge_windows(region, holes, tuple(x), tuple(y)))
        total += full - outside
    return total


def estimate_exp_overlap_in(holes: Holes, region: SpaceTimeRegion, lam: float,
                            delta: float, n_samples: int,
                            rng: np.random.Generator) -> Estimate:
    """mu[exp(-lam L)] where L is the overlap integral over edge windows
    shadowed by the holes (edges with an endpoint inside)."""
    edges = region.edge_set().edges

    def value(config):
        return math.exp(-lam * restricted_overlap_sum(config, holes, edges))

    w, vals = _weights_and_values(region, lam, delta, n_samples, rng, value)
    return ratio_estimate_jackknife(w * vals, w)


# -- partition-style estimates over cut regions ------------------------------

@dataclass
class CutSpinConfiguration:
    """Spin values on a region with holes: independent components per site.

    Each component carries its own fair initial sign and flip set; values are
    undefined inside the holes (never queried there).
    """

    region: SpaceTimeRegion
    components: dict  # site -> list of (start, length, init, flips-offsets)

    def value(self, x, t: float) -> int:
        for (start, length, init, flips) in self.components[tuple(x)]:
            offset = t - start
            if self.region.time_topology == "circle":
                offset = offset % self.region.r
            if -1e-12 <= offset <= length + 1e-12:
                count = int(np.searchsorted(flips, offset, side="right"))
                return init * (1 if count % 2 == 0 else -1)
        raise ValueError(f"time {t} not in any component of site {x}")


def _sample_cut_config(region: SpaceTimeRegion, holes: Holes, delta: float,
                       rng: np.random.Generator) -> tuple[CutSpinConfiguration, float]:
    """Sample the a-priori measure on the cut region.

    Returns the configuration and the exact conditioning factor contributed
    by the time boundary rule: uncut periodic circles are conditioned on even
    flip counts (factor (1 + e^{-2 delta r})/2 per site); cut components are
    free on both ends and carry no factor.
    """
    comps = {}
    log_factor = 0.0
    for x in region.box.sites():
        site_comps = []
        parts = line_components(region, holes, x)
        cut = bool(holes.on_site(x))
        for part in parts:
            if region.time_topology == "circle":
                start, length = part
            else:
                start, length = part[0], part[1] - part[0]
            if region.bc_time == "p" and not cut:
                times = _even_poisson_times(0.0, length, delta, rng)
                log_factor += math.log((1.0 + math.exp(-2.0 * delta * length)) / 2.0)
            else:
                times = _poisson_times(0.0, length, delta, rng)
            init = 1 if rng.random() < 0.5 else -1
            site_comps.append((start, length, init, times))
        comps[x] = site_comps
    return CutSpinConfiguration(region, comps), log_factor


def _cut_overlap(config: CutSpinConfiguration, x, y, windows) -> float:
    region = config.region
    total = 0.0
    for (lo, hi) in windows:
        breaks = {lo, hi}
        for site in (tuple(x), tuple(y)):
            for (start, length, _, flips) in config.components[site]:
                for f in flips:
                    t = start + f
                    base = t if t <= region.t_max else t - region.r
                    for cand in (t, base):
                        if lo < cand < hi:
                            breaks.add(cand)
        bl = sorted(breaks)
        for i in range(len(bl) - 1):
            a, b = bl[i], bl[i + 1]
            if b <= a:
                continue
            mid = (a + b) / 2.0
            base = mid if mid <= region.t_max else mid - region.r
            total += (b - a) * config.value(x, base) * config.value(y, base)
    return total


def estimate_cut_partition(region: SpaceTimeRegion, holes: Holes, lam: float,
                           delta: float, n_samples: int,
                           rng: np.random.Generator) -> Estimate:
    """Estimate the Gibbs partition value of the region with holes removed:
    the a-priori mean of exp(lam * overlap over surviving edge windows),
    multiplied by the exact boundary conditioning factors."""
    if region.bc_time == "w":
        raise ValueError("cut-partition estimates support free and periodic time")
    edges = region.edge_set().edges
    windows = {e: edge_windows(region, holes, e[0], e[1]) for e in edges}
    vals = np.empty(n_samples)
    for i in range(n_samples):
        config, log_factor = _sample_cut_config(region, holes, delta, rng)
        total = sum(_cut_overlap(config, x, y, windows[(x, y)]) for (x, y) in edges)
        vals[i] = math.exp(lam * total + log_factor)
    return mean_estimate(vals)


# -- Suzuki-Trotter discretized Metropolis sampler ---------------------------

def _proper_ring_colors(n: int, neighbours: list) -> np.ndarray:
    colors = -np.ones(n, dtype=int)
    for i in range(n):
        used = {colors[j] for j in neighbours[i] if colors[j] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[i] = c
    return colors


@dataclass
class TrotterResult:
    estimate: Estimate
    dt: float
    n_slots: int
    approximate: bool = True


class TrotterSampler:
    """Checkerboard Metropolis on the Suzuki-Trotter lattice of a region.

    The time direction is discretized into slots of width ~dt; space coupling
    per slot is lam*dt and the time coupling is -log(tanh(delta*dt))/2.
    Results are approximate with an O(dt^2) bias; the step used is recorded
    in every result.
    """

    def __init__(self, region: SpaceTimeRegion, lam: float, delta: float,
                 dt: float = 0.1):
        self.region = region
        self.lam = lam
        self.delta = delta
        self.n_slots = max(4, int(round(region.r / dt)))
        self.dt = region.r / self.n_slots
        self.k_time = -0.5 * math.log(math.tanh(delta * self.dt))
        self.k_space = lam * self.dt

        self.sites = region.box.sites()
        index = {x: i for i, x in enumerate(self.sites)}
        edge_set = region.edge_set()
        nbrs = [[] for _ in self.sites]
        field = np.zeros(len(self.sites))
        for (x, y) in edge_set.edges:
            xi = index.get(tuple(x))
            yi = index.get(tuple(y))
            if xi is not None and yi is not None:
                nbrs[xi].append(yi)
                nbrs[yi].append(xi)
            elif xi is not None:
                field[xi] += 1.0  # frozen +1 neighbour
            elif yi is not None:
                field[yi] += 1.0
        self.field = field * self.k_space
        max_deg = max((len(v) for v in nbrs), default=0)
        self.nbr_idx = np.zeros((len(self.sites), max_deg), dtype=int)
        self.nbr_mask = np.zeros((len(self.sites), max_deg))
        for i, v in enumerate(nbrs):
            for j, w in enumerate(v):
                self.nbr_idx[i, j] = w
                self.nbr_mask[i, j] = 1.0

        site_colors = _proper_ring_colors(len(self.sites), nbrs)
        m = self.n_slots
        time_nbrs = [[(i - 1) % m, (i + 1) % m] if region.bc_time == "p"
                     else [j for j in (i - 1, i + 1) if 0 <= j < m]
                     for i in range(m)]
        slot_colors = _proper_ring_colors(m, time_nbrs)
        n_slot_colors = slot_colors.max() + 1
        self.cells_by_color = {}
        full = site_colors[:, None] * n_slot_colors + slot_colors[None, :]
        for c in np.unique(full):
            self.cells_by_color[int(c)] = np.nonzero(full == c)

        self.spins = np.ones((len(self.sites), m), dtype=np.int8)
        self.origin = index[(0,) * region.box.d]

    def _space_field(self) -> np.ndarray:
        gathered = self.spins[self.nbr_idx, :] * self.nbr_mask[:, :, None]
        return self.k_space * gathered.sum(axis=1) + self.field[:, None]

    def _time_field(self) -> np.ndarray:
        m = self.n_slots
        s = self.spins
        if self.region.bc_time == "p":
            tf = np.roll(s, 1, axis=1) + np.roll(s, -1, axis=1)
        else:
            tf = np.zeros_like(s, dtype=float)
            tf[:, 1:] += s[:, :-1]
            tf[:, :-1] += s[:, 1:]
            if self.region.bc_time == "w":
                tf[:, 0] += 1.0
                tf[:, -1] += 1.0
        return self.k_time * tf

    def sweep(self, rng: np.random.Generator) -> None:
        for c, cells in self.cells_by_color.items():
            local = self._space_field() + self._time_field()
            d_e = 2.0 * self.spins * local
            accept = rng.random(size=self.spins.shape) < np.exp(-np.clip(d_e, 0, 700))
            flip = np.zeros_like(self.spins, dtype=bool)
            flip[cells] = accept[cells]
            self.spins[flip] *= -1

    def run(self, n_sweeps: int, rng: np.random.Generator, measure,
            burn: int | None = None) -> np.ndarray:
        burn = n_sweeps // 5 if burn is None else burn
        for _ in range(burn):
            self.sweep(rng)
        out = []
        for _ in range(n_sweeps):
            self.sweep(rng)
            out.append(measure(self))
        return np.asarray(out)

    # measurement helpers ---------------------------------------------------
    def magnetization_origin(self) -> float:
        mid = self.n_slots // 2
        return float(self.spins[self.origin, mid])

    def pair_correlation(self, distance: int) -> float:
        """Translation-averaged equal-time pair correlation at a lattice
        distance (d=1, spatially periodic regions)."""
        s = self.spins.astype(float)
        rolled = np.roll(s, -distance, axis=0)
        return float((s * rolled).mean())


def trotter_magnetization(region: SpaceTimeRegion, lam: float, delta: float,
                          n_sweeps: int, rng: np.random.Generator,
                          dt: float = 0.1) -> TrotterResult:
    sampler = TrotterSampler(region, lam, delta, dt)
    series = sampler.run(n_sweeps, rng, TrotterSampler.magnetization_origin)
    return TrotterResult(batch_means_estimate(series), sampler.dt, sampler.n_slots)


def trotter_pair_correlations(region: SpaceTimeRegion, lam: float, delta: float,
                              distances: Sequence[int], n_sweeps: int,
                              rng: np.random.Generator, dt: float = 0.1) -> dict:
    sampler = TrotterSampler(region, lam, delta, dt)
    series = sampler.run(n_sweeps, rng,
                         lambda s: [s.pair_correlation(d) for d in distances])
    return {d: TrotterResult(batch_means_estimate(series[:, i]), sampler.dt, sampler.n_slots)
            for i, d in enumerate(distances)}
