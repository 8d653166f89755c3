"""Cluster statistics of the coupled measure and the trifurcation diagnostic.

Clusters are computed from the open-path structure (blocking cuts are the
cut points labelled even in both labellings).  "Unbounded" has no meaning in
a finite box, so the reports use boundary-touching clusters as the standard
finite-size surrogate.  The leaf-bound comparison counts maximal cut-free
intervals meeting the region boundary, using the raw cut process: that
collection refines the clusters, which is what makes the per-configuration
trifurcation inequality structural rather than statistical.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .geometry import SpaceTimeRegion
from .randomparity import (ClusterPartition, CoupledConfiguration, _UnionFind,
                           connectivity, sample_coupled)
from .stats import Estimate, ratio_estimate_independent


@dataclass
class ClusterReport:
    n_clusters: int
    boundary_touching: int
    origin_to_ghost: bool
    origin_to_boundary: bool
    largest_cluster_measure: float


def cluster_report(coupled: CoupledConfiguration, probe_n0: int | None = None,
                   probe_r0: float | None = None) -> ClusterReport:
    """Cluster decomposition of the region under the open-path semantics.

    Cluster counts use ghost-free connectivity (the ghost class is a
    boundary artifact); origin-to-ghost uses the ghost-jump rules."""
    region = coupled.region
    part = ClusterPartition.build(coupled, "off")
    classes = part.classes()
    boundary_sites = set(region.box.boundary_sites())
    n_clusters = len(classes)
    boundary = 0
    largest = 0.0
    eps = 1e-12
    origin = (0,) * region.box.d
    for members in classes.values():
        measure = 0.0
        touches = False
        for (x, i) in members:
            start, length = part.interval_span(x, i)
            measure += length
            if x in boundary_sites:
                touches = True
            if region.time_topology == "interval":
                if start <= region.t_min + eps or start + length >= region.t_max - eps:
                    touches = True
        largest = max(largest, measure)
        if touches:
            boundary += 1
    to_ghost = connectivity(coupled, (origin, 0.0), None, "to-gamma") \
        if (coupled.ghosts or region.time_topology == "interval") else False
    to_boundary = False
    if probe_n0 is not None and probe_r0 is not None:
        root = part.uf.find(part.vertex(origin, 0.0))
        for (x, i) in classes.get(root, []):
            start, length = part.interval_span(x, i)
            outside_box = any(abs(c) > probe_n0 for c in x)
            outside_time = start < -probe_r0 / 2 - eps or start + length > probe_r0 / 2 + eps
            if outside_box or outside_time:
                to_boundary = True
                break
    return ClusterReport(n_clusters, boundary, to_ghost, to_boundary, largest)


def two_point_connectivity(region: SpaceTimeRegion, lam: float, delta: float,
                           p: tuple, q: tuple, n_samples: int,
                           rng: np.random.Generator) -> Estimate:
    """Weighted frequency of {p <-> q} under the coupled measure (paths may
    jump via the ghost class, as the identity with the correlation product
    requires)."""
    num = np.empty(n_samples)
    den = np.empty(n_samples)
    for i in range(n_samples):
        c = sample_coupled(region, lam, delta, (), (), rng)
        w = c.weight
        den[i] = w
        num[i] = w if (w > 0 and connectivity(c, p, q, "plain")) else 0.0
    return ratio_estimate_independent(num, den)


def origin_ghost_probability(region: SpaceTimeRegion, lam: float, delta: float,
                             n_samples: int, rng: np.random.Generator) -> Estimate:
    origin = ((0,) * region.box.d, 0.0)
    num = np.empty(n_samples)
    den = np.empty(n_samples)
    for i in range(n_samples):
        c = sample_coupled(region, lam, delta, (), (), rng)
        w = c.weight
        den[i] = w
        num[i] = w if (w > 0 and connectivity(c, origin, None, "to-gamma")) else 0.0
    return ratio_estimate_independent(num, den)


# -- trifurcation diagnostic ---------------------------------------------------

def boundary_interval_count(coupled: CoupledConfiguration) -> int:
    """Number of maximal cut-free intervals meeting the region boundary.

    Raw cuts (not only blocking ones): spatial-boundary sites contribute all
    their intervals, other sites the intervals touching the time endpoints."""
    region = coupled.region
    boundary_sites = set(region.box.boundary_sites())
    total = 0
    for x in region.box.sites():
        k = len(np.asarray(coupled.cuts.get(x, ())))
        if region.time_topology == "circle":
            n_intervals = max(1, k)
            if x in boundary_sites:
                total += n_intervals
        else:
            n_intervals = k + 1
            if x in boundary_sites:
                total += n_intervals
            else:
                total += 1 if k == 0 else 2
    return total


def leaf_bound(region: SpaceTimeRegion, delta: float) -> float:
    """Expected boundary-interval bound 2|box| + 4 delta r |spatial boundary|."""
    n_boundary = len(region.box.boundary_sites())
    return 2.0 * region.box.site_count + 4.0 * delta * region.r * n_boundary


def leaf_bound_printed_form(region: SpaceTimeRegion, delta: float) -> float:
    """The looser printed form 2(2N+1)^d + 4 delta r (2N+1)^{d-1}, kept for
    reference (it undercounts the boundary sites)."""
    side = region.box.side
    return 2.0 * side**region.box.d + 4.0 * delta * region.r * side ** (region.box.d - 1)


def _block_window(t0: float, r0: float) -> tuple:
    return (t0 - r0 / 2.0, t0 + r0 / 2.0)


def _complement_branches(coupled: CoupledConfiguration, center_x, t0: float,
                         n0: int, r0: float) -> int:
    """Boundary-touching complement components attached to the block."""
    region = coupled.region
    eps = 1e-12
    lo_w, hi_w = _block_window(t0, r0)
    block_sites = {x for x in region.box.sites()
                   if all(abs(c - c0) <= n0 for c, c0 in zip(x, center_x))}

    def kept_spans(x) -> list:
        if x not in block_sites:
            return [(region.t_min, region.t_max)]
        out = []
        if lo_w > region.t_min:
            out.append((region.t_min, lo_w))
        if hi_w < region.t_max:
            out.append((hi_w, region.t_max))
        return out

    # vertices: kept spans subdivided at blocking cuts
    spans = []
    index = {}
    for x in region.box.sites():
        for (lo, hi) in kept_spans(x):
            cuts = [float(c) for c in np.asarray(coupled.cuts.get(x, ()))
                    if lo < float(c) < hi
                    and coupled.labelling1.label_is_even(x, float(c))
                    and coupled.labelling2.label_is_even(x, float(c))]
            bounds = [lo] + sorted(cuts) + [hi]
            for i in range(len(bounds) - 1):
                index[(x, bounds[i])] = len(spans)
                spans.append((x, bounds[i], bounds[i + 1]))

    def vertex(x, t):
        best = None
        for key, vid in index.items():
            if key[0] != x:
                continue
            a = key[1]
            b = spans[vid][2]
            if a - eps <= t <= b + eps:
                if best is None or a > spans[best][1] - eps:
                    best = vid
        return best

    # components of the complement (no block vertex), plus the set of
    # complement vertices directly attached to the block
    boundary_sites = set(region.box.boundary_sites())
    uf2 = _UnionFind(len(spans))
    adjacent = set()
    for ((x, y), t) in coupled.bridge_times_union():
        vx = vertex(x, t)
        vy = vertex(y, t)
        if vx is not None and vy is not None:
            uf2.union(vx, vy)
        elif vx is not None and y in block_sites and lo_w <= t <= hi_w:
            adjacent.add(vx)
        elif vy is not None and x in block_sites and lo_w <= t <= hi_w:
            adjacent.add(vy)
    for x in block_sites:
        for t_edge in (lo_w, hi_w):
            v = vertex(x, t_edge)
            if v is not None:
                adjacent.add(v)
    branch_roots = set()
    for vid, (x, a, b) in enumerate(spans):
        touches = x in boundary_sites
        if region.time_topology == "interval" and (a <= region.t_min + eps or b >= region.t_max - eps):
            touches = True
        if touches:
            root = uf2.find(vid)
            if any(uf2.find(v) == root for v in adjacent):
                branch_roots.add(root)
    return len(branch_roots)


def _block_fully_connected(coupled: CoupledConfiguration, center_x, t0: float,
                           n0: int, r0: float) -> bool:
    region = coupled.region
    lo_w, hi_w = _block_window(t0, r0)
    block_sites = [x for x in region.box.sites()
                   if all(abs(c - c0) <= n0 for c, c0 in zip(x, center_x))]
    spans = []
    index_of = {}
    for x in block_sites:
        cuts = [float(c) for c in np.asarray(coupled.cuts.get(x, ()))
                if lo_w < float(c) < hi_w
                and coupled.labelling1.label_is_even(x, float(c))
                and coupled.labelling2.label_is_even(x, float(c))]
        bounds = [lo_w] + sorted(cuts) + [hi_w]
        for i in range(len(bounds) - 1):
            index_of[(x, i)] = len(spans)
            spans.append((x, bounds[i], bounds[i + 1]))
    if not spans:
        return False
    uf = _UnionFind(len(spans))
    for ((x, y), t) in coupled.bridge_times_union():
        if not (lo_w <= t <= hi_w):
            continue
        vx = vy = None
        for vid, (sx, a, b) in enumerate(spans):
            if sx == x and a <= t <= b:
                vx = vid
            if sx == y and a <= t <= b:
                vy = vid
        if vx is not None and vy is not None:
            uf.union(vx, vy)
    return len({uf.find(i) for i in range(len(spans))}) == 1


@dataclass
class TrifurcationReport:
    n_trifurcations: int
    n_boundary_intervals: int
    n_probes: int
    n_clipped: int
    leaf_bound: float
    leaf_bound_printed: float


def trifurcation_diagnostic(coupled: CoupledConfiguration, n0: int,
                            r0: float, delta: float) -> TrifurcationReport:
    """Count probe points whose translated block is internally all-connected
    while its complement shows at least three distinct boundary-touching
    branches.  Probes whose block exits the region are clipped and counted."""
    region = coupled.region
    step_x = 2 * n0 + 1
    step_t = 2.0 * r0
    lo_c, hi_c = region.box.coord_range[0], region.box.coord_range[-1]
    d = region.box.d
    coords = range(-(abs(lo_c) // step_x) * step_x, hi_c + 1, step_x)
    probes_x = list(itertools.product(coords, repeat=d))
    n_t = int(region.r / step_t) + 1
    probes_t = [k * step_t for k in range(-n_t, n_t + 1)
                if region.t_min <= k * step_t <= region.t_max]
    n_trif = 0
    n_clipped = 0
    n_probes = 0
    for cx in probes_x:
        inside = all(lo_c <= c - n0 and c + n0 <= hi_c for c in cx)
        for t0 in probes_t:
            window_ok = (region.time_topology == "circle" or
                         (region.t_min <= t0 - r0 / 2 and t0 + r0 / 2 <= region.t_max))
            if not (inside and window_ok):
                n_clipped += 1
                continue
            n_probes += 1
            if not _block_fully_connected(coupled, cx, t0, n0, r0):
                continue
            if _complement_branches(coupled, cx, t0, n0, r0) >= 3:
                n_trif += 1
    return TrifurcationReport(
        n_trif, boundary_interval_count(coupled), n_probes, n_clipped,
        leaf_bound(region, delta), leaf_bound_printed_form(region, delta))
