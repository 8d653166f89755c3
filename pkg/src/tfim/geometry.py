"""Lattice boxes, edge sets, space-time regions and dual (Fourier) lattices.

Two box conventions are supported: the symmetric box {-n, ..., n}^d used by
the samplers, and the even-side box {-n+1, ..., n}^d used by the Fourier
sweeps (an even side length is what makes the momentum grid land on
(-pi, pi]).  All geometry values are immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

Site = Tuple[int, ...]
Edge = Tuple[Site, Site]

SYMMETRIC = "symmetric"
EVEN_SIDE = "even-side"


class GeometryError(ValueError):
    """Raised for invalid geometric parameters or out-of-domain points."""


@dataclass(frozen=True)
class Box:
    """A finite box in Z^d.

    ``symmetric`` convention: sites {-n, ..., n}^d (odd side 2n+1).
    ``even-side`` convention: sites {-n+1, ..., n}^d (even side 2n).
    """

    d: int
    n: int
    convention: str = SYMMETRIC

    def __post_init__(self):
        if self.d < 1:
            raise GeometryError(f"dimension must be positive, got {self.d}")
        if self.n < 0:
            raise GeometryError(f"half-side must be nonnegative, got {self.n}")
        if self.convention not in (SYMMETRIC, EVEN_SIDE):
            raise GeometryError(f"unknown box convention {self.convention!r}")
        if self.convention == EVEN_SIDE and self.n < 1:
            raise GeometryError("even-side boxes need n >= 1")

    @property
    def coord_range(self) -> range:
        if self.convention == SYMMETRIC:
            return range(-self.n, self.n + 1)
        return range(-self.n + 1, self.n + 1)

    @property
    def side(self) -> int:
        return 2 * self.n + 1 if self.convention == SYMMETRIC else 2 * self.n

    def sites(self) -> list[Site]:
        return [tuple(p) for p in itertools.product(self.coord_range, repeat=self.d)]

    @property
    def site_count(self) -> int:
        return self.side**self.d

    def __contains__(self, x: Sequence[int]) -> bool:
        r = self.coord_range
        return len(x) == self.d and all(c in r for c in x)

    def shrunk(self) -> "Box":
        """The box with half-side n-1 in the same convention."""
        if self.n == 0 or (self.convention == EVEN_SIDE and self.n == 1):
            raise GeometryError("cannot shrink a minimal box")
        return Box(self.d, self.n - 1, self.convention)

    def boundary_sites(self) -> list[Site]:
        """Sites of the box not contained in the next-smaller box."""
        try:
            inner = self.shrunk()
        except GeometryError:
            return self.sites()
        return [x for x in self.sites() if x not in inner]

    def exterior_neighbour_count(self, x: Site) -> int:
        """Number of nearest neighbours of x lying outside the box."""
        if x not in self:
            raise GeometryError(f"site {x} not in box")
        lo, hi = self.coord_range[0], self.coord_range[-1]
        return sum((c == lo) + (c == hi) for c in x)


def _nn_pairs(sites: Iterable[Site]) -> list[Edge]:
    site_set = set(sites)
    edges = []
    for x in site_set:
        for j in range(len(x)):
            y = tuple(c + (1 if i == j else 0) for i, c in enumerate(x))
            if y in site_set:
                edges.append((x, y))
    return sorted(edges)


@dataclass(frozen=True)
class EdgeSet:
    """Unordered nearest-neighbour pairs for one of the three spatial modes.

    ``free``: pairs inside the box.  ``wired-extended``: pairs inside the
    enlarged box, with the added shell flagged frozen.  ``spatially-periodic``:
    free pairs plus wrap-around pairs whose differing coordinate takes the two
    extreme values.  Wrap pairs are kept with multiplicity, so a side-2
    periodic box carries a doubled edge.
    """

    mode: str
    edges: Tuple[Edge, ...]
    frozen_sites: Tuple[Site, ...] = ()

    @staticmethod
    def free(box: Box) -> "EdgeSet":
        return EdgeSet("free", tuple(_nn_pairs(box.sites())))

    @staticmethod
    def wired_extended(box: Box) -> "EdgeSet":
        extended = Box(box.d, box.n + 1, box.convention)
        inner = set(box.sites())
        frozen = tuple(x for x in extended.sites() if x not in inner)
        return EdgeSet("wired-extended", tuple(_nn_pairs(extended.sites())), frozen)

    @staticmethod
    def spatially_periodic(box: Box) -> "EdgeSet":
        lo, hi = box.coord_range[0], box.coord_range[-1]
        edges = list(_nn_pairs(box.sites()))
        if hi > lo:
            for x in box.sites():
                for j in range(box.d):
                    if x[j] == hi:
                        y = tuple(lo if i == j else c for i, c in enumerate(x))
                        edges.append((y, x) if y <= x else (x, y))
        return EdgeSet("spatially-periodic", tuple(sorted(edges)))


def edges_for_bc(box: Box, bc_space: str) -> EdgeSet:
    if bc_space == "f":
        return EdgeSet.free(box)
    if bc_space == "w":
        return EdgeSet.wired_extended(box)
    if bc_space == "p":
        return EdgeSet.spatially_periodic(box)
    raise GeometryError(f"unknown spatial boundary condition {bc_space!r}")


@dataclass(frozen=True)
class SpaceTimeRegion:
    """A box crossed with a time interval [-r/2, r/2] or a circle of length r.

    The time direction is a circle exactly when bc_time == 'p'.  Ground-state
    regions (the beta = infinity family) couple the time length to the box via
    r = 2n; use :meth:`ground_state` to get that schedule enforced.
    """

    box: Box
    r: float
    bc_space: str
    bc_time: str
    beta_infinite: bool = False

    def __post_init__(self):
        if self.r <= 0:
            raise GeometryError(f"time length must be positive, got {self.r}")
        if self.bc_space not in ("f", "w", "p"):
            raise GeometryError(f"bad spatial boundary condition {self.bc_space!r}")
        if self.bc_time not in ("f", "w", "p"):
            raise GeometryError(f"bad temporal boundary condition {self.bc_time!r}")
        if self.beta_infinite:
            if self.bc_time == "p":
                raise GeometryError("ground-state regions use interval time topology")
            if self.r != 2 * self.box.n:
                raise GeometryError("ground-state regions require r = 2n")

    @staticmethod
    def finite_beta(box: Box, beta: float, bc_space: str = "f", bc_time: str = "p") -> "SpaceTimeRegion":
        return SpaceTimeRegion(box, float(beta), bc_space, bc_time)

    @staticmethod
    def ground_state(box: Box, bc_space: str = "f", bc_time: str = "f") -> "SpaceTimeRegion":
        return SpaceTimeRegion(box, float(2 * box.n), bc_space, bc_time, beta_infinite=True)

    @property
    def time_topology(self) -> str:
        return "circle" if self.bc_time == "p" else "interval"

    @property
    def t_min(self) -> float:
        return -self.r / 2.0

    @property
    def t_max(self) -> float:
        return self.r / 2.0

    def edge_set(self) -> EdgeSet:
        return edges_for_bc(self.box, self.bc_space)

    def sites(self) -> list[Site]:
        return self.box.sites()

    @property
    def volume(self) -> float:
        """Total time-length of all site lines, r * |box|."""
        return self.r * self.box.site_count

    def contains_time(self, t: float) -> bool:
        return self.t_min <= t <= self.t_max

    def contains_point(self, point: Tuple[Site, float]) -> bool:
        x, t = point
        return tuple(x) in self.box and self.contains_time(t)


@dataclass(frozen=True)
class DualLattice:
    """Momentum/frequency grid dual to a space-time region.

    Momenta are (pi/n) * (box coordinates); frequencies are the multiples of
    2*pi/r with |l| <= l_max.
    """

    box: Box
    r: float
    l_max: float

    def momenta(self) -> list[Tuple[float, ...]]:
        step = math.pi / self.box.n
        return [tuple(step * c for c in x) for x in self.box.sites()]

    def frequencies(self) -> np.ndarray:
        step = 2.0 * math.pi / self.r
        j_max = int(math.floor(self.l_max / step + 1e-9))
        return step * np.arange(-j_max, j_max + 1)

    def points(self, include_zero: bool = False):
        """Iterate over (k, l) pairs, excluding (0, 0) unless asked."""
        for k in self.momenta():
            for l in self.frequencies():
                if not include_zero and all(c == 0.0 for c in k) and l == 0.0:
                    continue
                yield k, float(l)


@dataclass(frozen=True)
class Holes:
    """A finite union of closed per-site time intervals removed from a region.

    ``intervals`` maps a site to disjoint, sorted (a, b) pairs with a <= b
    (a == b is an excised point).  Cutting a site's full circle or interval
    into pieces changes the labelling anchors of the graphical
    representations, so the per-site component structure is exposed here.
    """

    intervals: tuple  # ((site, (a, b)), ...) sorted

    @staticmethod
    def of(mapping: dict) -> "Holes":
        items = []
        for site, spans in mapping.items():
            spans = sorted((float(a), float(b)) for (a, b) in spans)
            for i, (a, b) in enumerate(spans):
                if b < a:
                    raise GeometryError(f"bad hole ({a}, {b})")
                if i and a <= spans[i - 1][1]:
                    raise GeometryError("holes on one site must be disjoint")
                items.append((tuple(site), (a, b)))
        return Holes(tuple(sorted(items)))

    @staticmethod
    def empty() -> "Holes":
        return Holes(())

    def on_site(self, site: Site) -> list:
        return [span for (x, span) in self.intervals if x == site]

    @property
    def total_length(self) -> float:
        return sum(b - a for (_, (a, b)) in self.intervals)

    def cut_sites(self) -> list:
        return sorted({x for (x, _) in self.intervals})


def line_components(region: SpaceTimeRegion, holes: Holes, site: Site) -> list:
    """Connected components of a site line after removing the holes.

    Interval topology returns (lo, hi) pairs inside [-r/2, r/2].  Circle
    topology returns (start, length) arcs, where an uncut circle is the single
    arc (t_min, r); a degenerate excised point still cuts the circle.
    """
    spans = holes.on_site(site)
    if region.time_topology == "interval":
        comps = []
        lo = region.t_min
        for (a, b) in spans:
            if a > lo:
                comps.append((lo, a))
            lo = max(lo, b)
        if region.t_max > lo:
            comps.append((lo, region.t_max))
        return comps
    if not spans:
        return [(region.t_min, region.r)]
    arcs = []
    for i, (_, b) in enumerate(spans):
        next_a = spans[(i + 1) % len(spans)][0]
        length = (next_a - b) % region.r
        if length == 0.0 and len(spans) == 1 and spans[0][0] == b:
            length = region.r  # a single excised point opens the full circle
        if length > 0:
            arcs.append((b, length))
    return arcs


def edge_windows(region: SpaceTimeRegion, holes: Holes, x: Site, y: Site) -> list:
    """Time windows where both endpoints of an edge are present (holes removed).

    Returned as (lo, hi) in base coordinates; on the circle the windows are
    the complement of the union of the two sites' holes, possibly wrapping,
    reported as (start, start + length) with start in [-r/2, r/2)."""
    spans = sorted(holes.on_site(x) + holes.on_site(y))
    merged = []
    for (a, b) in spans:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    if region.time_topology == "interval":
        out = []
        lo = region.t_min
        for (a, b) in merged:
            if a > lo:
                out.append((lo, a))
            lo = max(lo, b)
        if region.t_max > lo:
            out.append((lo, region.t_max))
        return out
    if not merged:
        return [(region.t_min, region.t_max)]
    out = []
    for i, (_, b) in enumerate(merged):
        next_a = merged[(i + 1) % len(merged)][0]
        length = (next_a - b) % region.r
        if length == 0.0 and len(merged) == 1 and merged[0][0] == b:
            length = region.r
        if length > 0:
            out.append((b, b + length))
    return out


def edge_shadow_length(region: SpaceTimeRegion, holes: Holes, edges: Iterable[Edge]) -> float:
    """Total length of edge-time windows touching the holes (the measure of
    the edge set shadowed by the removed intervals)."""
    total = 0.0
    for (x, y) in edges:
        present = sum(hi - lo for (lo, hi) in edge_windows(region, holes, x, y))
        total += region.r - present
    return total


def frequency_cutoff(lam: float, delta: float, r: float, tol: float = 1e-3) -> float:
    """Frequency cutoff making the discarded tail of sum 1/E below tol.

    The tail of sum_{|l|>L} 1/E(p, l) is at most 2 * 96*delta*(r/2pi)^2 / j
    with j = L r / (2 pi), independently of the momentum.
    """
    if tol <= 0:
        raise GeometryError("tolerance must be positive")
    j = max(1.0, 192.0 * delta * (r / (2.0 * math.pi)) ** 2 / tol)
    return 2.0 * math.pi * j / r


def l1_norm(point) -> float:
    """l1 norm of a lattice point, or of a space-time point ((x...), t)."""
    if len(point) == 2 and isinstance(point[0], (tuple, list, np.ndarray)):
        x, t = point
        return float(sum(abs(c) for c in x) + abs(t))
    return float(sum(abs(c) for c in point))


def graph_laplacian_ft(p: Sequence[float]) -> float:
    """Fourier transform of the graph Laplacian, sum_j (1 - cos p_j).

    Each coordinate must lie in (-pi, pi].
    """
    slack = 1e-12
    for c in p:
        if not (-math.pi - slack < c <= math.pi + slack):
            raise GeometryError(f"momentum coordinate {c} outside (-pi, pi]")
    return float(sum(1.0 - math.cos(c) for c in p))
