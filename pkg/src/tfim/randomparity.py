"""Random-parity representation: bridges, ghosts, cuts, labellings, the
coupled measure, connectivity, and the switching and local-modification
verifiers.

A labelling assigns alternating even/odd tags to each site line; tags switch
exactly at the switching points (sources, bridge endpoints, ghost points) and
the odd set is closed.  A labelling is consistent when every site carries an
even number of switching points, and its weight is exp(2*delta*even-length);
the code works with weights normalized by the maximum exp(2*delta*volume),
i.e. exp(-2*delta*odd-length), which is scale-equivalent in every identity
and avoids overflow.

Boundary conventions: free time anchors the endpoints even, wired time odd,
periodic time anchors the label at time zero with a fair coin tau that is
resampled per draw and never exposed.  Wired space draws ghost points on
boundary sites at rate lam times the number of exterior neighbours.  Coupled
configurations pair a plain labelling (free space) with a ghosted one (wired
space): periodic/periodic when the region is a finite-beta circle, free/wired
otherwise, plus an independent rate-4*delta cut process.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (Box, EdgeSet, Holes, SpaceTimeRegion, edge_shadow_length,
                       edge_windows, l1_norm, line_components)
from .stats import (Estimate, difference_estimate, mean_estimate,
                    ratio_estimate_independent, ratio_estimate_jackknife)
from . import spinrep


class InconsistentSourceError(ValueError):
    """Raised for source points at the time endpoints."""


def _check_sources(region: SpaceTimeRegion, sources: Sequence) -> list:
    pts = [(tuple(x), float(t)) for (x, t) in sources]
    for (x, t) in pts:
        if not region.contains_point((x, t)):
            raise InconsistentSourceError(f"source {(x, t)} outside region")
        if region.time_topology == "interval" and abs(abs(t) - region.r / 2) < 1e-12:
            raise InconsistentSourceError("sources must avoid the time endpoints")
    if len(set(pts)) != len(pts):
        raise InconsistentSourceError("duplicate source points")
    return pts


# -- labellings ---------------------------------------------------------------

@dataclass
class Labelling:
    """Even/odd decomposition of the site lines of a region.

    ``switches`` maps each site to its sorted switching times.  ``first_even``
    says whether the interval beginning at the reference point (time t_min on
    intervals, the anchor time 0 on circles) is even.  Inconsistent labellings
    keep ``consistent`` False and weight zero.
    """

    region: SpaceTimeRegion
    switches: dict
    first_even: dict
    consistent: bool
    bc_time: str

    def label_is_even(self, x, t: float) -> bool:
        """Label at (x, t); switching points themselves are odd (closed odd)."""
        x = tuple(x)
        times = self.switches[x]
        idx = bisect.bisect_left(times, t)
        if idx < len(times) and times[idx] == t:
            return False
        if self.bc_time == "p":
            # reference at time 0: parity of switches in (0, t] or (t, 0]
            if t >= 0:
                count = bisect.bisect_right(times, t) - bisect.bisect_right(times, 0.0)
            else:
                count = bisect.bisect_right(times, 0.0) - bisect.bisect_right(times, t)
            return self.first_even[x] == (count % 2 == 0)
        count = bisect.bisect_right(times, t)
        return self.first_even[x] == (count % 2 == 0)

    def even_in(self, x, span: tuple) -> bool:
        """True when the whole closed span [a, b] is labelled even."""
        a, b = span
        x = tuple(x)
        times = self.switches[x]
        if bisect.bisect_right(times, b) - bisect.bisect_left(times, a) > 0:
            return False
        return self.label_is_even(x, a) if a == b else self.label_is_even(x, (a + b) / 2.0)

    def odd_length(self) -> float:
        total = 0.0
        r = self.region.r
        for x, times in self.switches.items():
            if len(times) == 0:
                if not self.first_even[x]:
                    total += r
                continue
            # walk the intervals from the reference point
            if self.bc_time == "p":
                bounds = list(times) + [times[0] + r]
                mid = (bounds[0] + bounds[1]) / 2.0
                base = mid if mid <= self.region.t_max else mid - r
                even = self.label_is_even(x, base)
                for i in range(len(times)):
                    length = bounds[i + 1] - bounds[i]
                    if not even:
                        total += length
                    even = not even
            else:
                bounds = [self.region.t_min] + list(times) + [self.region.t_max]
                even = self.first_even[x]
                for i in range(len(bounds) - 1):
                    if not even:
                        total += bounds[i + 1] - bounds[i]
                    even = not even
        return total

    def even_length(self) -> float:
        return self.region.volume - self.odd_length()

    def log_weight_normalized(self) -> float:
        """log of exp(2 delta eps) / exp(2 delta volume); -inf if inconsistent.

        The delta factor is applied by the caller (kept separate so one
        labelling can be reweighted)."""
        if not self.consistent:
            return -math.inf
        return -self.odd_length()

    def weight_normalized(self, delta: float) -> float:
        if not self.consistent:
            return 0.0
        return math.exp(-2.0 * delta * self.odd_length())


def build_labelling(region: SpaceTimeRegion, bridges: dict, ghosts: dict | None,
                    sources: Sequence, bc_time: str,
                    tau: dict | None = None) -> Labelling:
    """Assemble the labelling from its switching points.

    ``bridges`` maps edges to time arrays, ``ghosts`` sites to time arrays
    (None for the plain labelling).  ``tau`` supplies the periodic anchors
    (required exactly when bc_time == 'p')."""
    pts = _check_sources(region, sources)
    if (bc_time == "p") != (tau is not None):
        raise ValueError("tau is supplied exactly for periodic time")
    per_site = {x: [] for x in region.box.sites()}
    for (x, y), times in bridges.items():
        for t in np.asarray(times):
            if tuple(x) in per_site:
                per_site[tuple(x)].append(float(t))
            if tuple(y) in per_site:
                per_site[tuple(y)].append(float(t))
    if ghosts:
        for x, times in ghosts.items():
            for t in np.asarray(times):
                per_site[tuple(x)].append(float(t))
    for (x, t) in pts:
        per_site[x].append(t)

    switches = {}
    first_even = {}
    consistent = True
    for x, times in per_site.items():
        times.sort()
        switches[x] = times
        if len(times) % 2 != 0:
            consistent = False
        if bc_time == "f":
            first_even[x] = True
        elif bc_time == "w":
            first_even[x] = False
        else:
            first_even[x] = tau[x] == 0
    return Labelling(region, switches, first_even, consistent, bc_time)


# -- process sampling ---------------------------------------------------------

def _poisson_on(lo: float, hi: float, rate: float, rng: np.random.Generator) -> np.ndarray:
    n = rng.poisson(rate * (hi - lo))
    return np.sort(rng.uniform(lo, hi, size=n))


def ghost_rates(box: Box, lam: float) -> dict:
    return {x: lam * box.exterior_neighbour_count(x) for x in box.sites()
            if box.exterior_neighbour_count(x) > 0}


@dataclass
class CoupledConfiguration:
    """Two independent labellings plus the cut process.

    The plain labelling comes from (bridges, tau) with free-space edges; the
    ghosted one from (bridges_hat, ghosts, tau_hat).  ``cuts`` maps sites to
    rate-4*delta time arrays.  Weight is the product of the two normalized
    labelling weights."""

    region: SpaceTimeRegion
    lam: float
    delta: float
    labelling1: Labelling
    labelling2: Labelling
    bridges1: dict
    bridges2: dict
    ghosts: dict
    cuts: dict

    @property
    def weight(self) -> float:
        return (self.labelling1.weight_normalized(self.delta)
                * self.labelling2.weight_normalized(self.delta))

    def bridge_times_union(self) -> list:
        out = []
        for b in (self.bridges1, self.bridges2):
            for (x, y), times in b.items():
                out.extend(((tuple(x), tuple(y)), float(t)) for t in np.asarray(times))
        return out


def coupled_bc_pair(region: SpaceTimeRegion) -> tuple[str, str]:
    """Time boundary pairings of the coupled measure: periodic/periodic on
    circles (finite beta), free/wired on intervals (ground-state style)."""
    if region.bc_time == "p":
        return "p", "p"
    return "f", "w"


def _distinct(arrays: list) -> bool:
    allt = np.concatenate([np.asarray(a, dtype=float) for a in arrays]) if arrays else np.empty(0)
    if allt.size < 2:
        return True
    s = np.sort(allt)
    return bool(np.all(np.diff(s) > 0))


def sample_coupled(region: SpaceTimeRegion, lam: float, delta: float,
                   sources1: Sequence = (), sources2: Sequence = (),
                   rng: np.random.Generator = None,
                   ghost_free: bool = False) -> CoupledConfiguration:
    """One weighted draw of the coupled measure (weight may be zero)."""
    t1, t2 = coupled_bc_pair(region)
    box = region.box
    lo, hi = region.t_min, region.t_max
    free_edges = list(EdgeSet.free(box).edges)
    for _ in range(100):
        bridges1 = {e: _poisson_on(lo, hi, lam, rng) for e in free_edges}
        bridges2 = {e: _poisson_on(lo, hi, lam, rng) for e in free_edges}
        ghosts = ({} if ghost_free else
                  {x: _poisson_on(lo, hi, rate, rng)
                   for x, rate in ghost_rates(box, lam).items()})
        cuts = {x: _poisson_on(lo, hi, 4.0 * delta, rng) for x in box.sites()}
        if _distinct([*bridges1.values(), *bridges2.values(), *ghosts.values()]):
            break
    tau1 = {x: int(rng.integers(2)) for x in box.sites()} if t1 == "p" else None
    tau2 = {x: int(rng.integers(2)) for x in box.sites()} if t2 == "p" else None
    lab1 = build_labelling(region, bridges1, None, sources1, t1, tau1)
    lab2 = build_labelling(region, bridges2, ghosts, sources2, t2, tau2)
    return CoupledConfiguration(region, lam, delta, lab1, lab2,
                                bridges1, bridges2, ghosts, cuts)


# -- connectivity -------------------------------------------------------------

class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        self.parent[self.find(i)] = self.find(j)


@dataclass
class ClusterPartition:
    """Maximal blocking-cut-free intervals per site, with disjoint-set
    structure over bridges and (optionally) ghost jumps.

    Blocking cuts are the cut points labelled even in both labellings; all
    other cuts are invisible to paths.  On circles a cut-free line is a
    single wrap-around vertex.
    """

    region: SpaceTimeRegion
    blocking: dict          # site -> sorted list of blocking cut times
    offsets: dict           # site -> first vertex id
    counts: dict            # site -> number of intervals on the line
    uf: _UnionFind
    ghost_vertex: int | None
    ghost_mode: str

    @staticmethod
    def build(coupled: CoupledConfiguration, ghost_mode: str = "plain") -> "ClusterPartition":
        region = coupled.region
        circle = region.time_topology == "circle"
        blocking = {}
        for x in region.box.sites():
            times = [float(c) for c in np.asarray(coupled.cuts.get(x, ()))
                     if coupled.labelling1.label_is_even(x, float(c))
                     and coupled.labelling2.label_is_even(x, float(c))]
            blocking[x] = sorted(times)
        offsets = {}
        counts = {}
        total = 0
        for x in region.box.sites():
            k = len(blocking[x])
            n = max(1, k) if circle else k + 1
            offsets[x] = total
            counts[x] = n
            total += n
        uf = _UnionFind(total + 1)
        ghost_vertex = total if ghost_mode != "off" else None
        part = ClusterPartition(region, blocking, offsets, counts, uf,
                                ghost_vertex, ghost_mode)
        for ((x, y), t) in coupled.bridge_times_union():
            uf.union(part.vertex(x, t), part.vertex(y, t))
        if ghost_mode != "off":
            for x, times in coupled.ghosts.items():
                for t in np.asarray(times):
                    uf.union(part.vertex(x, float(t)), ghost_vertex)
            if not circle and coupled_bc_pair(region)[1] == "w":
                for x in region.box.sites():
                    uf.union(part.vertex(x, region.t_min), ghost_vertex)
                    uf.union(part.vertex(x, region.t_max), ghost_vertex)
        return part

    def vertex(self, x, t: float) -> int:
        x = tuple(x)
        cuts = self.blocking[x]
        if self.region.time_topology == "circle":
            if not cuts:
                return self.offsets[x]
            idx = bisect.bisect_right(cuts, t)
            return self.offsets[x] + (idx - 1) % len(cuts)
        return self.offsets[x] + bisect.bisect_right(cuts, t)

    def connected(self, p: tuple, q: tuple) -> bool:
        (x, s), (y, t) = p, q
        return self.uf.find(self.vertex(x, s)) == self.uf.find(self.vertex(y, t))

    def connected_to_ghost(self, p: tuple) -> bool:
        if self.ghost_vertex is None:
            raise ValueError("partition built without ghost structure")
        (x, s) = p
        return self.uf.find(self.vertex(x, s)) == self.uf.find(self.ghost_vertex)

    def interval_span(self, x, index: int) -> tuple:
        """(start, length) of an interval vertex on site x."""
        cuts = self.blocking[tuple(x)]
        r = self.region.r
        if self.region.time_topology == "circle":
            if not cuts:
                return (self.region.t_min, r)
            a = cuts[index]
            b = cuts[(index + 1) % len(cuts)]
            return (a, (b - a) % r if len(cuts) > 1 else r)
        bounds = [self.region.t_min] + cuts + [self.region.t_max]
        return (bounds[index], bounds[index + 1] - bounds[index])

    def classes(self) -> dict:
        """Map class representative -> list of (site, interval index)."""
        out = {}
        for x in self.region.box.sites():
            for i in range(self.counts[x]):
                root = self.uf.find(self.offsets[x] + i)
                out.setdefault(root, []).append((x, i))
        return out

    def ghost_root(self) -> int | None:
        return None if self.ghost_vertex is None else self.uf.find(self.ghost_vertex)


def connectivity(coupled: CoupledConfiguration, p: tuple, q: tuple,
                 mode: str = "plain") -> bool:
    """Open-path connectivity between space-time points.

    ``plain`` allows ghost jumps (wired-time intervals also wire the time
    endpoints), ``off-gamma`` forbids all ghost jumps, ``to-gamma`` asks
    whether p reaches the ghost class (q ignored)."""
    p = (tuple(p[0]), float(p[1]))
    q = (tuple(q[0]), float(q[1])) if q is not None else None
    if mode == "to-gamma":
        return ClusterPartition.build(coupled, "plain").connected_to_ghost(p)
    if mode == "off-gamma":
        return ClusterPartition.build(coupled, "off").connected(p, q)
    if mode == "plain":
        return ClusterPartition.build(coupled, "plain").connected(p, q)
    raise ValueError(f"unknown connectivity mode {mode!r}")


def odd_path_exists(lab: Labelling, bridges: dict, p: tuple, q: tuple) -> bool:
    """Connectivity inside the closed odd set of a single labelling, crossing
    bridges at their (odd) endpoints."""
    region = lab.region
    sites = region.box.sites()
    # vertices: odd intervals per site
    spans = {}
    offsets = {}
    total = 0
    for x in sites:
        times = lab.switches[x]
        site_spans = []
        if region.time_topology == "circle":
            if not times:
                if not lab.first_even[x]:
                    site_spans.append((region.t_min, region.t_min + region.r))
            else:
                for i, a in enumerate(times):
                    b = times[(i + 1) % len(times)]
                    length = (b - a) % region.r
                    if length == 0.0:
                        length = region.r
                    mid = a + length / 2.0
                    base = mid if mid <= region.t_max else mid - region.r
                    if not lab.label_is_even(x, base):
                        site_spans.append((a, a + length))
        else:
            bounds = [region.t_min] + list(times) + [region.t_max]
            for i in range(len(bounds) - 1):
                a, b = bounds[i], bounds[i + 1]
                if b > a and not lab.label_is_even(x, (a + b) / 2.0):
                    site_spans.append((a, b))
        offsets[x] = total
        spans[x] = site_spans
        total += len(site_spans)
    uf = _UnionFind(total)

    def find_span(x, t):
        r = region.r
        eps = 1e-9 * max(r, 1.0)  # wrap arithmetic rounds the arc endpoints
        for i, (a, b) in enumerate(spans[tuple(x)]):
            tt = t
            if region.time_topology == "circle":
                while tt < a - eps:
                    tt += r
                if a - eps <= tt <= b + eps:
                    return offsets[tuple(x)] + i
            elif a - eps <= t <= b + eps:
                return offsets[tuple(x)] + i
        return None

    for (x, y), times in bridges.items():
        for t in np.asarray(times):
            vx = find_span(x, float(t))
            vy = find_span(y, float(t))
            if vx is not None and vy is not None:
                uf.union(vx, vy)
    vp = find_span(p[0], p[1])
    vq = find_span(q[0], q[1])
    return vp is not None and vq is not None and uf.find(vp) == uf.find(vq)


# -- estimators and verifiers -------------------------------------------------

def _labelling_weights(region: SpaceTimeRegion, lam: float, delta: float,
                       sources: Sequence, n_samples: int,
                       rng: np.random.Generator, with_ghosts: bool) -> np.ndarray:
    lo, hi = region.t_min, region.t_max
    box = region.box
    free_edges = list(EdgeSet.free(box).edges)
    bc = region.bc_time
    out = np.empty(n_samples)
    rates = ghost_rates(box, lam) if with_ghosts else {}
    for i in range(n_samples):
        bridges = {e: _poisson_on(lo, hi, lam, rng) for e in free_edges}
        ghosts = {x: _poisson_on(lo, hi, rate, rng) for x, rate in rates.items()}
        tau = {x: int(rng.integers(2)) for x in box.sites()} if bc == "p" else None
        lab = build_labelling(region, bridges, ghosts if with_ghosts else None,
                              sources, bc, tau)
        out[i] = lab.weight_normalized(delta)
    return out


def estimate_rpr_correlation(sources: Sequence, region: SpaceTimeRegion,
                             lam: float, delta: float, n_samples: int,
                             rng: np.random.Generator) -> Estimate:
    """Correlation as a ratio of mean labelling weights (sources over empty),
    using the region's spatial condition (wired space adds ghost points).
    Numerator and denominator use independent pools; the standard error is
    the delta method."""
    _check_sources(region, sources)
    with_ghosts = region.bc_space == "w"
    num = _labelling_weights(region, lam, delta, sources, n_samples, rng, with_ghosts)
    den = _labelling_weights(region, lam, delta, (), n_samples, rng, with_ghosts)
    if den.sum() == 0:
        raise RuntimeError("no consistent source-free labelling sampled")
    return ratio_estimate_independent(num, den)


@dataclass
class IdentityReport:
    """Two-sided verification record, JSON-serializable via __dict__."""

    identity: str
    lhs: float
    rhs: float
    se_lhs: float
    se_rhs: float
    n: int
    params: dict
    extra: dict = field(default_factory=dict)

    @property
    def gap_in_se(self) -> float:
        se = math.hypot(self.se_lhs, self.se_rhs)
        return abs(self.lhs - self.rhs) / se if se > 0 else math.inf

    def agrees(self, n_se: float = 3.0) -> bool:
        return self.gap_in_se <= n_se


def verify_switching(region: SpaceTimeRegion, lam: float, delta: float,
                     kappa: tuple, n_samples: int,
                     rng: np.random.Generator) -> IdentityReport:
    """Monte Carlo check of the switching identity at sources {origin, kappa}.

    Left side needs no cuts; the right side carries the off-ghost
    connectivity indicator evaluated on the coupled draw."""
    origin = ((0,) * region.box.d, 0.0)
    kappa = (tuple(kappa[0]), float(kappa[1]))
    sources = (origin, kappa)
    lhs = np.empty(n_samples)
    rhs = np.empty(n_samples)
    for i in range(n_samples):
        c_l = sample_coupled(region, lam, delta, sources, (), rng)
        lhs[i] = c_l.weight
        c_r = sample_coupled(region, lam, delta, (), sources, rng)
        w = c_r.weight
        if w > 0 and connectivity(c_r, origin, kappa, "off-gamma"):
            rhs[i] = w
        else:
            rhs[i] = 0.0
    el, er = mean_estimate(lhs), mean_estimate(rhs)
    return IdentityReport("switching", el.value, er.value, el.stderr, er.stderr,
                          n_samples, {"lam": lam, "delta": delta, "kappa": kappa})


def switching_exact_discrete(n_slots: int, sites, edges, topology: str,
                             bc_pair: tuple, p_bridge: float, w_even: float,
                             ghost_multiplicity: dict, p_ghost: float,
                             source_a, source_b) -> IdentityReport:
    """Exhaustively enumerated switching check on a Bernoulli discretization."""
    from .discrete import DiscreteSystem, switching_sides
    system = DiscreteSystem(tuple(sites), tuple(edges), n_slots, topology,
                            bc_pair[0], bc_pair[1], p_bridge, w_even,
                            dict(ghost_multiplicity), p_ghost)
    lhs, rhs = switching_sides(system, source_a, source_b)
    return IdentityReport("switching-exact", lhs, rhs, 0.0, 0.0, 0,
                          {"n_slots": n_slots, "p_bridge": p_bridge,
                           "w_even": w_even, "p_ghost": p_ghost})


def correlation_difference_bound(region: SpaceTimeRegion, lam: float, delta: float,
                                 kappa: tuple, n_samples: int,
                                 rng: np.random.Generator) -> dict:
    """The two-sided bound chain for the wired/free correlation difference.

    Estimates the wired and free correlations (ghosted and plain labelling
    ratios), and the ghost-connection bound E(w1 w2(0k) 1{0<->Gamma}) /
    E(w1 w2); returns the three estimates and the checked inequalities."""
    origin = ((0,) * region.box.d, 0.0)
    kappa = (tuple(kappa[0]), float(kappa[1]))
    sources = (origin, kappa)
    wired_region = SpaceTimeRegion(region.box, region.r, "w", region.bc_time,
                                   region.beta_infinite)
    free_region = SpaceTimeRegion(region.box, region.r, "f", region.bc_time,
                                  region.beta_infinite)
    corr_w = estimate_rpr_correlation(sources, wired_region, lam, delta, n_samples, rng)
    corr_f = estimate_rpr_correlation(sources, free_region, lam, delta, n_samples, rng)
    num = np.empty(n_samples)
    den = np.empty(n_samples)
    for i in range(n_samples):
        c = sample_coupled(region, lam, delta, (), sources, rng)
        w = c.weight
        den_c = sample_coupled(region, lam, delta, (), (), rng)
        den[i] = den_c.weight
        num[i] = w if (w > 0 and connectivity(c, origin, None, "to-gamma")) else 0.0
    bound = ratio_estimate_independent(num, den)
    diff = difference_estimate(corr_w, corr_f)
    se_low = diff.stderr
    se_high = math.hypot(diff.stderr, bound.stderr)
    return {
        "difference": diff,
        "wired": corr_w,
        "free": corr_f,
        "ghost_bound": bound,
        "lower_ok": diff.value >= -3.0 * se_low,
        "upper_ok": diff.value <= bound.value + 3.0 * se_high,
    }


# -- local modification constants and verifiers -------------------------------

def constant_A(kappa: tuple, lam: float, delta: float, beta: float | None) -> float:
    """Source-removal constant: exp(6 delta (|t|+2+|x|)) (2/lam + lam)^{|t|+2+|x|}
    in the ground-state regime, exp(6 delta beta |x|) (2/(lam beta) +
    lam beta)^{|x|} at finite beta."""
    if lam <= 0:
        raise ValueError("constant_A needs lam > 0")
    x, t = kappa
    nx = l1_norm(tuple(x))
    if beta is None:
        m = abs(t) + 2.0 + nx
        return math.exp(6.0 * delta * m) * (2.0 / lam + lam) ** m
    if lam * beta <= 0:
        raise ValueError("constant_A needs lam * beta > 0")
    return math.exp(6.0 * delta * beta * nx) * (2.0 / (lam * beta) + lam * beta) ** nx


def constant_B(n0: int, r0: float, lam: float, delta: float, d: int) -> float:
    """Block-wiring constant exp(4 delta r0 (2 n0+1)^d)^2 (1 + 2/(lam r0)^2)^
    {2 d (2 n0 + 1)^d}."""
    if lam * r0 <= 0:
        raise ValueError("constant_B needs lam * r0 > 0")
    cells = (2 * n0 + 1) ** d
    return math.exp(4.0 * delta * r0 * cells) ** 2 * (1.0 + 2.0 / (lam * r0) ** 2) ** (2 * d * cells)


def all_connected_in_block(coupled: CoupledConfiguration, n0: int,
                           r0: float) -> bool:
    """Whether every pair of points of the block box_{n0} x I_{r0} is joined
    by an open path staying inside the block."""
    region = coupled.region
    circle = region.time_topology == "circle"
    block_sites = [x for x in region.box.sites() if all(abs(c) <= n0 for c in x)]
    lo, hi = -r0 / 2.0, r0 / 2.0
    full_window = circle and r0 >= region.r

    def in_window(t: float) -> bool:
        return full_window or (lo <= t <= hi)

    # per site: blocking cuts inside the window split the clipped line
    offsets = {}
    counts = {}
    boundaries = {}
    total = 0
    for x in block_sites:
        cuts = [float(c) for c in np.asarray(coupled.cuts.get(x, ()))
                if in_window(float(c))
                and coupled.labelling1.label_is_even(x, float(c))
                and coupled.labelling2.label_is_even(x, float(c))]
        cuts.sort()
        boundaries[x] = cuts
        n = (max(1, len(cuts)) if full_window else len(cuts) + 1)
        offsets[x] = total
        counts[x] = n
        total += n
    uf = _UnionFind(total)

    def vertex(x, t):
        cuts = boundaries[tuple(x)]
        if full_window:
            if not cuts:
                return offsets[tuple(x)]
            idx = bisect.bisect_right(cuts, t)
            return offsets[tuple(x)] + (idx - 1 if idx > 0 else len(cuts) - 1)
        return offsets[tuple(x)] + bisect.bisect_right(cuts, t)

    for ((x, y), t) in coupled.bridge_times_union():
        if x in offsets and y in offsets and in_window(t):
            uf.union(vertex(x, t), vertex(y, t))
    roots = {uf.find(i) for i in range(total)}
    return len(roots) == 1


def verify_local_modification_A(region: SpaceTimeRegion, lam: float, delta: float,
                                kappa: tuple, n_samples: int,
                                rng: np.random.Generator) -> dict:
    """Checks wired-minus-free correlation <= C_kappa * Pbar(origin <-> Gamma)."""
    beta = region.r if region.bc_time == "p" else None
    c_k = constant_A(kappa, lam, delta, beta)
    chain = correlation_difference_bound(region, lam, delta, kappa, n_samples, rng)
    origin = ((0,) * region.box.d, 0.0)
    num = np.empty(n_samples)
    den = np.empty(n_samples)
    for i in range(n_samples):
        c = sample_coupled(region, lam, delta, (), (), rng)
        w = c.weight
        den[i] = w
        num[i] = w if (w > 0 and connectivity(c, origin, None, "to-gamma")) else 0.0
    p_ghost = ratio_estimate_independent(num, den)
    diff = chain["difference"]
    rhs = c_k * p_ghost.value
    se = math.hypot(diff.stderr, c_k * p_ghost.stderr)
    return {"difference": diff, "p_origin_ghost": p_ghost, "constant": c_k,
            "rhs": rhs, "holds": diff.value <= rhs + 3.0 * se}


def verify_local_modification_B(region: SpaceTimeRegion, lam: float, delta: float,
                                n0: int, r0: float, events: dict,
                                n_samples: int, rng: np.random.Generator) -> dict:
    """Checks Pbar(A) <= c(n0, r0) Pbar(A and block fully connected) for each
    named event A (callables on coupled configurations, measurable outside
    the block)."""
    c = constant_B(n0, r0, lam, delta, region.box.d)
    weights = np.empty(n_samples)
    hits = {name: np.zeros(n_samples) for name in events}
    joint = {name: np.zeros(n_samples) for name in events}
    for i in range(n_samples):
        config = sample_coupled(region, lam, delta, (), (), rng)
        w = config.weight
        weights[i] = w
        if w == 0:
            continue
        wired = None
        for name, event in events.items():
            if event(config):
                hits[name][i] = w
                if wired is None:
                    wired = all_connected_in_block(config, n0, r0)
                if wired:
                    joint[name][i] = w
    results = {}
    for name in events:
        pa = ratio_estimate_independent(hits[name], weights)
        pac = ratio_estimate_independent(joint[name], weights)
        se = math.hypot(pa.stderr, c * pac.stderr)
        results[name] = {"p_event": pa, "p_event_and_connected": pac,
                         "constant": c,
                         "holds": pa.value <= c * pac.value + 3.0 * se}
    return results


# -- holes and event-probability identities -----------------------------------

def _component_anchor(region: SpaceTimeRegion, lo: float, hi: float,
                      bc_time: str) -> tuple[bool, bool]:
    """(left anchor even, right anchor even) of an interval component."""
    left = True if lo > region.t_min else bc_time == "f"
    right = True if hi < region.t_max else bc_time == "f"
    return left, right


def sample_cut_labelling_weight(region: SpaceTimeRegion, holes: Holes, lam: float,
                                delta: float, bc_time: str,
                                rng: np.random.Generator) -> float:
    """One normalized weight draw of the source-free labelling on the region
    with the holes removed (bridge intensity vanishes when either endpoint is
    missing; anchors at hole endpoints are even)."""
    from .geometry import EdgeSet
    box = region.box
    free_edges = list(EdgeSet.free(box).edges)
    switch_per_site = {x: [] for x in box.sites()}
    for e in free_edges:
        for (lo, hi) in edge_windows(region, holes, e[0], e[1]):
            for t in _poisson_on(lo, hi, lam, rng):
                base = t if t <= region.t_max else t - region.r
                switch_per_site[tuple(e[0])].append(base)
                switch_per_site[tuple(e[1])].append(base)
    odd_total = 0.0
    circle = region.time_topology == "circle"
    for x in box.sites():
        times = sorted(switch_per_site[x])
        comps = line_components(region, holes, x)
        cut = bool(holes.on_site(x))
        if circle and not cut:
            if bc_time != "p":
                raise ValueError("circle topology pairs with periodic time")
            if len(times) % 2 != 0:
                return 0.0
            tau_even = rng.integers(2) == 0
            if not times:
                odd_total += 0.0 if tau_even else region.r
            else:
                bounds = times + [times[0] + region.r]
                for i in range(len(times)):
                    a, b = bounds[i], bounds[i + 1]
                    mid = (a + b) / 2.0
                    base = mid if mid <= region.t_max else mid - region.r
                    if base >= 0:
                        count_mid = sum(1 for s in times if 0.0 < s <= base)
                    else:
                        count_mid = sum(1 for s in times if base < s <= 0.0)
                    if tau_even != (count_mid % 2 == 0):
                        odd_total += b - a
            continue
        for comp in comps:
            if circle:
                start, length = comp
                lo_c, hi_c = start, start + length
            else:
                lo_c, hi_c = comp
                length = hi_c - lo_c
            inside = [t for t in times if lo_c < t < hi_c] + \
                     [t + region.r for t in times if circle and lo_c < t + region.r < hi_c]
            inside.sort()
            if circle:
                left_even = right_even = True
            else:
                left_even, right_even = _component_anchor(region, lo_c, hi_c, bc_time)
            need_odd = left_even != right_even
            if (len(inside) % 2 == 1) != need_odd:
                return 0.0
            even = left_even
            bounds = [lo_c] + inside + [hi_c]
            for i in range(len(bounds) - 1):
                if not even:
                    odd_total += bounds[i + 1] - bounds[i]
                even = not even
    return math.exp(-2.0 * delta * odd_total)


def holes_identity_check(holes: Holes, region: SpaceTimeRegion, lam: float,
                         delta: float, n_samples: int,
                         rng: np.random.Generator) -> IdentityReport:
    """Both sides of the holes identity, in normalized-weight form:

        E_{cut}[W'] = 2^{m_p} e^{lam |Jt|} E[W 1{even in J}],

    where W, W' are the weights normalized by their regions' volumes, |Jt| is
    the shadowed edge measure, and m_p counts cut circles (periodic time
    only).  The printed form of the identity omits the e^{lam |Jt|} and
    2^{m_p} factors; the report carries the residual of that form too."""
    if region.bc_space != "f":
        raise ValueError("the holes identity concerns the plain labelling")
    bc = region.bc_time
    from .geometry import EdgeSet
    edges = EdgeSet.free(region.box).edges
    shadow = edge_shadow_length(region, holes, edges)
    m_p = len(holes.cut_sites()) if bc == "p" else 0

    lhs = np.empty(n_samples)
    for i in range(n_samples):
        lhs[i] = sample_cut_labelling_weight(region, holes, lam, delta, bc, rng)
    rhs = np.empty(n_samples)
    for i in range(n_samples):
        lab = _sample_plain_labelling(region, lam, delta, rng)
        w = lab.weight_normalized(delta)
        if w > 0 and all(lab.even_in(x, span) for (x, span) in holes.intervals):
            rhs[i] = w
        else:
            rhs[i] = 0.0
    scale = (2.0**m_p) * math.exp(lam * shadow)
    el = mean_estimate(lhs)
    er_raw = mean_estimate(rhs)
    er = Estimate(scale * er_raw.value, scale * er_raw.stderr, er_raw.n)
    printed_rhs = er_raw.value * 1.0  # identity as printed: no shadow factor
    return IdentityReport(
        "holes", el.value, er.value, el.stderr, er.stderr, n_samples,
        {"lam": lam, "delta": delta, "hole_length": holes.total_length,
         "shadow": shadow, "m_p": m_p},
        extra={"printed_rhs": printed_rhs,
               "printed_residual": el.value - printed_rhs})


def _sample_plain_labelling(region: SpaceTimeRegion, lam: float, delta: float,
                            rng: np.random.Generator) -> Labelling:
    free_edges = list(EdgeSet.free(region.box).edges)
    lo, hi = region.t_min, region.t_max
    bridges = {e: _poisson_on(lo, hi, lam, rng) for e in free_edges}
    tau = ({x: int(rng.integers(2)) for x in region.box.sites()}
           if region.bc_time == "p" else None)
    return build_labelling(region, bridges, None, (), region.bc_time, tau)


def event_probability_identity(holes: Holes, region: SpaceTimeRegion, lam: float,
                               delta: float, n_samples: int,
                               rng: np.random.Generator) -> IdentityReport:
    """Cross-representation identity for P(labelling even throughout J).

    Left: the tilted-labelling probability.  Right: 2^{-m_p} times the ratio
    of spin-side partition values of the cut and full regions.  The report
    also evaluates the printed closed form c(J) mu[exp(-lam L_J)] with
    c(J) = 2^{-n} e^{delta |J| + lam |Jt|} for reference."""
    if region.bc_space != "f":
        raise ValueError("the tilted measure concerns the plain labelling")
    num = np.empty(n_samples)
    den = np.empty(n_samples)
    for i in range(n_samples):
        lab = _sample_plain_labelling(region, lam, delta, rng)
        w = lab.weight_normalized(delta)
        den[i] = w
        if w > 0 and all(lab.even_in(x, span) for (x, span) in holes.intervals):
            num[i] = w
        else:
            num[i] = 0.0
    lhs = ratio_estimate_jackknife(num, den)

    m_p = len(holes.cut_sites()) if region.bc_time == "p" else 0
    z_cut = spinrep.estimate_cut_partition(region, holes, lam, delta, n_samples, rng)
    z_full = spinrep.estimate_cut_partition(region, Holes.empty(), lam, delta,
                                            n_samples, rng)
    rhs_val = (0.5**m_p) * z_cut.value / z_full.value
    rhs_se = (0.5**m_p) * math.hypot(z_cut.stderr / z_full.value,
                                     z_cut.value * z_full.stderr / z_full.value**2)

    # printed closed form, for the report only
    edges = EdgeSet.free(region.box).edges
    shadow = edge_shadow_length(region, holes, edges)
    n_extra = 0
    for x in region.box.sites():
        comps = line_components(region, holes, x)
        n_extra += len(comps) - 1
    c_printed = (0.5**n_extra) * math.exp(delta * holes.total_length + lam * shadow)
    mu = spinrep.estimate_exp_overlap_in(holes, region, lam, delta, n_samples, rng)
    return IdentityReport(
        "event-probability", lhs.value, rhs_val, lhs.stderr, rhs_se, n_samples,
        {"lam": lam, "delta": delta, "hole_length": holes.total_length,
         "shadow": shadow, "m_p": m_p},
        extra={"printed_rhs": c_printed * mu.value,
               "printed_c": c_printed,
               "mu_exp_L": mu.value})
