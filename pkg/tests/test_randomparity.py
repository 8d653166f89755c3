import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tfim.geometry import Box, Holes, SpaceTimeRegion
from tfim import randomparity as rp
from tfim import spectral as sp
from tfim.rng import chain_generator


def region_f(n=1, r=4.0):
    return SpaceTimeRegion(Box(1, n), r, "f", "f")


def test_labelling_trivial_cases():
    region = region_f()
    lab = rp.build_labelling(region, {}, None, [], "f")
    assert lab.consistent
    assert lab.even_length() == pytest.approx(region.volume)
    assert lab.weight_normalized(1.0) == pytest.approx(1.0)

    lab2 = rp.build_labelling(region, {}, None, [((0,), 0.0), ((0,), 1.0)], "f")
    assert lab2.consistent
    assert lab2.odd_length() == pytest.approx(1.0)
    assert not lab2.label_is_even((0,), 0.5)
    assert lab2.label_is_even((0,), -0.5)
    # the odd subset is closed: switching points are odd
    assert not lab2.label_is_even((0,), 0.0)

    lab3 = rp.build_labelling(region, {}, None, [((0,), 0.0)], "f")
    assert not lab3.consistent
    assert lab3.weight_normalized(1.0) == 0.0


def test_labelling_source_at_endpoint_rejected():
    region = region_f()
    with pytest.raises(rp.InconsistentSourceError):
        rp.build_labelling(region, {}, None, [((0,), 2.0)], "f")


def test_labelling_wired_anchor():
    region = SpaceTimeRegion(Box(1, 0), 2.0, "f", "w")
    lab = rp.build_labelling(region, {}, None, [], "w")
    assert lab.consistent
    assert lab.odd_length() == pytest.approx(2.0)
    lab2 = rp.build_labelling(region, {}, None, [((0,), -0.5), ((0,), 0.5)], "w")
    assert lab2.even_length() == pytest.approx(1.0)


def test_labelling_periodic_tau():
    region = SpaceTimeRegion.finite_beta(Box(1, 0), 2.0)
    lab = rp.build_labelling(region, {}, None, [], "p", {(0,): 0})
    assert lab.even_length() == pytest.approx(2.0)
    lab1 = rp.build_labelling(region, {}, None, [], "p", {(0,): 1})
    assert lab1.even_length() == pytest.approx(0.0)
    sources = [((0,), -0.5), ((0,), 0.5)]
    lab2 = rp.build_labelling(region, {}, None, sources, "p", {(0,): 0})
    assert lab2.consistent
    assert lab2.odd_length() == pytest.approx(1.0)


@given(st.lists(st.floats(-0.99, 0.99), min_size=0, max_size=8),
       st.lists(st.floats(-0.99, 0.99), min_size=0, max_size=8))
@settings(max_examples=60, deadline=None)
def test_even_odd_lengths_additive(times_a, times_b):
    region = SpaceTimeRegion(Box(1, 1, "even-side"), 2.0, "f", "f")
    times_a = sorted(set(times_a))
    times_b = sorted(set(times_b))
    bridges = {((0,), (1,)): np.array(sorted(set(times_a + times_b)))}
    lab = rp.build_labelling(region, bridges, None, [], "f")
    assert lab.even_length() + lab.odd_length() == pytest.approx(region.volume, abs=1e-12)


def test_weight_positive_iff_even_switch_counts():
    region = SpaceTimeRegion(Box(1, 1, "even-side"), 2.0, "f", "f")
    odd_bridge = {((0,), (1,)): np.array([0.2])}
    lab = rp.build_labelling(region, odd_bridge, None, [], "f")
    assert not lab.consistent
    even_bridge = {((0,), (1,)): np.array([0.2, 0.5])}
    lab2 = rp.build_labelling(region, even_bridge, None, [], "f")
    assert lab2.consistent and lab2.weight_normalized(1.0) > 0


def test_rpr_empty_sources_ratio_is_one():
    rng = chain_generator(11, 0)
    region = SpaceTimeRegion.finite_beta(Box(1, 1), 1.0, "f", "p")
    est = rp.estimate_rpr_correlation([], region, 1.0, 1.0, 500, rng)
    assert est.value == pytest.approx(1.0, abs=3 * est.stderr)


def test_rpr_zero_coupling_pair_vanishes():
    rng = chain_generator(11, 1)
    region = SpaceTimeRegion.finite_beta(Box(1, 1), 1.0, "f", "p")
    est = rp.estimate_rpr_correlation([((0,), 0.0), ((1,), 0.0)], region, 0.0,
                                      1.0, 300, rng)
    assert est.value == 0.0


def test_rpr_matches_oracle_and_spin():
    rng = chain_generator(11, 2)
    region = SpaceTimeRegion.finite_beta(Box(1, 1), 1.0, "f", "p")
    pts = [((0,), 0.0), ((1,), 0.0)]
    exact = sp.oracle_correlation(region, 1.0, 1.0, pts)
    est = rp.estimate_rpr_correlation(pts, region, 1.0, 1.0, 30000, rng)
    assert est.agrees_with(exact)


def test_rpr_wired_space_matches_oracle():
    rng = chain_generator(11, 3)
    region = SpaceTimeRegion.finite_beta(Box(1, 1), 1.0, "w", "p")
    pts = [((0,), 0.0), ((1,), 0.25)]
    exact = sp.oracle_correlation(region, 1.0, 1.0, pts)
    est = rp.estimate_rpr_correlation(pts, region, 1.0, 1.0, 30000, rng)
    assert est.agrees_with(exact)


def test_coupled_weight_zero_iff_inconsistent():
    rng = chain_generator(12, 0)
    region = SpaceTimeRegion.finite_beta(Box(1, 1, "even-side"), 1.0, "w", "p")
    seen_zero = seen_positive = False
    for _ in range(200):
        c = rp.sample_coupled(region, 1.0, 1.0, (), (), rng)
        w = c.weight
        consistent = c.labelling1.consistent and c.labelling2.consistent
        assert (w > 0) == consistent
        seen_zero |= w == 0
        seen_positive |= w > 0
    assert seen_zero and seen_positive


def test_coupled_zero_coupling_no_ghosts_all_even():
    rng = chain_generator(12, 1)
    region = SpaceTimeRegion.finite_beta(Box(1, 1), 1.0, "f", "p")
    # tau anchors make all-even only half the time per site; weight <= 1 and
    # equals 1 exactly when every line is fully even
    c = rp.sample_coupled(region, 0.0, 1.0, (), (), rng, ghost_free=True)
    assert c.weight <= 1.0
    assert c.weight > 0


def test_connectivity_examples():
    rng = chain_generator(12, 2)
    region = SpaceTimeRegion.ground_state(Box(1, 1), "w", "f")
    c = rp.sample_coupled(region, 0.0, 1.0, (), (), rng, ghost_free=True)
    p = ((0,), 0.0)
    q = ((1,), 0.3)
    assert rp.connectivity(c, p, p, "plain")
    assert not rp.connectivity(c, p, q, "off-gamma")  # no bridges, no ghosts


def test_single_blocking_cut_blocks_and_removal_reconnects():
    region = SpaceTimeRegion(Box(1, 0), 2.0, "f", "f")
    lab1 = rp.build_labelling(region, {}, None, [], "f")
    lab2 = rp.build_labelling(region, {}, None, [], "w")
    # second labelling all odd: no cut can block (needs even in both)
    c = rp.CoupledConfiguration(region, 0.0, 1.0, lab1, lab2, {}, {}, {},
                                {(0,): np.array([0.1])})
    assert rp.connectivity(c, ((0,), -0.4), ((0,), 0.4), "off-gamma")
    # make both labellings even: the cut blocks
    lab2e = rp.build_labelling(region, {}, None, [], "f")
    c2 = rp.CoupledConfiguration(region, 0.0, 1.0, lab1, lab2e, {}, {}, {},
                                 {(0,): np.array([0.1])})
    assert not rp.connectivity(c2, ((0,), -0.4), ((0,), 0.4), "off-gamma")
    c3 = rp.CoupledConfiguration(region, 0.0, 1.0, lab1, lab2e, {}, {}, {},
                                 {(0,): np.array([])})
    assert rp.connectivity(c3, ((0,), -0.4), ((0,), 0.4), "off-gamma")


def test_cut_thinning_never_disconnects():
    rng = chain_generator(12, 3)
    region = SpaceTimeRegion.finite_beta(Box(1, 1), 1.0, "w", "p")
    pairs_checked = 0
    for _ in range(400):
        c = rp.sample_coupled(region, 1.0, 1.0, (), (), rng)
        if c.weight == 0:
            continue
        p = ((0,), 0.0)
        q = ((1,), 0.2)
        before = rp.connectivity(c, p, q, "plain")
        thinned = {x: t[1:] for x, t in c.cuts.items()}
        c_thin = rp.CoupledConfiguration(region, c.lam, c.delta, c.labelling1,
                                         c.labelling2, c.bridges1, c.bridges2,
                                         c.ghosts, thinned)
        after = rp.connectivity(c_thin, p, q, "plain")
        if before:
            assert after
        pairs_checked += 1
    assert pairs_checked > 10


def test_two_source_odd_path():
    rng = chain_generator(12, 4)
    region = SpaceTimeRegion.finite_beta(Box(1, 1), 1.0, "f", "p")
    sources = (((0,), 0.0), ((1,), 0.2))
    found = 0
    for _ in range(400):
        c = rp.sample_coupled(region, 1.0, 1.0, sources, (), rng)
        if not c.labelling1.consistent:
            continue
        found += 1
        assert rp.odd_path_exists(c.labelling1, c.bridges1, *sources)
    assert found > 5


def test_switching_exact_modes():
    rep = rp.switching_exact_discrete(
        3, ("a", "b"), (("a", "b"),), "interval", ("f", "w"), 0.3, 1.25,
        {"a": 1, "b": 1}, 0.2, ("a", 1), ("b", 2))
    assert abs(rep.lhs - rep.rhs) <= 1e-12
    rep2 = rp.switching_exact_discrete(
        3, ("a", "b"), (("a", "b"),), "circle", ("p", "p"), 0.3, 1.2,
        {"a": 1, "b": 1}, 0.15, ("a", 0), ("b", 1))
    assert abs(rep2.lhs - rep2.rhs) <= 1e-12


def test_switching_continuum_mc():
    rng = chain_generator(13, 0)
    region = SpaceTimeRegion.finite_beta(Box(1, 1, "even-side"), 1.0, "w", "p")
    rep = rp.verify_switching(region, 1.0, 1.0, ((1,), 0.25), 8000, rng)
    assert rep.agrees(3.0)


def test_switching_zero_coupling_both_sides_vanish():
    rng = chain_generator(13, 1)
    region = SpaceTimeRegion.finite_beta(Box(1, 1, "even-side"), 1.0, "w", "p")
    rep = rp.verify_switching(region, 0.0, 1.0, ((1,), 0.25), 500, rng)
    assert rep.lhs == 0.0 and rep.rhs == 0.0


def test_correlation_difference_chain():
    rng = chain_generator(13, 2)
    region = SpaceTimeRegion.finite_beta(Box(1, 1, "even-side"), 1.0, "f", "p")
    out = rp.correlation_difference_bound(region, 1.0, 1.0, ((1,), 0.0), 8000, rng)
    assert out["lower_ok"] and out["upper_ok"]


def test_correlation_difference_ghost_free_collapses():
    rng = chain_generator(13, 3)
    region = SpaceTimeRegion.finite_beta(Box(1, 1, "even-side"), 1.0, "f", "p")
    out = rp.correlation_difference_bound(region, 0.0, 1.0, ((0,), 0.3), 4000, rng)
    # zero coupling: no ghosts reachable, difference = 0, bound = 0
    assert out["ghost_bound"].value == pytest.approx(0.0, abs=1e-12)
    assert abs(out["difference"].value) <= 3 * out["difference"].stderr


def test_constants_closed_forms():
    assert rp.constant_A(((0,) , 0.0), 1.0, 1.0, None) == pytest.approx(9 * math.exp(12.0))
    assert rp.constant_A(((0,), 0.0), 1.0, 1.0, 1.0) == pytest.approx(1.0)
    assert rp.constant_A(((1,), 0.0), 1.0, 1.0, 1.0) == pytest.approx(3 * math.exp(6.0))
    with pytest.raises(ValueError):
        rp.constant_A(((0,), 0.0), 0.0, 1.0, None)
    assert rp.constant_B(0, math.sqrt(2.0), 1.0, 0.0, 1) == pytest.approx(4.0)
    assert rp.constant_B(1, 1.0, 1.0, 1.0, 1) > rp.constant_B(0, 1.0, 1.0, 1.0, 1)
    with pytest.raises(ValueError):
        rp.constant_B(0, 0.0, 1.0, 1.0, 1)


def test_local_modification_bounds():
    rng = chain_generator(14, 0)
    region = SpaceTimeRegion.finite_beta(Box(1, 1, "even-side"), 1.0, "w", "p")
    rep = rp.verify_local_modification_A(region, 1.0, 1.0, ((1,), 0.0), 6000, rng)
    assert rep["holds"]
    events = {"far-site-no-cuts": lambda c: len(c.cuts.get((1,), ())) == 0,
              "far-site-many-cuts": lambda c: len(c.cuts.get((1,), ())) >= 2}
    out = rp.verify_local_modification_B(region, 1.0, 1.0, 0, 1.0, events,
                                         6000, rng)
    assert all(res["holds"] for res in out.values())


def test_holes_identity_zero_coupling_closed_form():
    rng = chain_generator(14, 1)
    region = SpaceTimeRegion(Box(1, 0), 2.0, "f", "f")
    holes = Holes.of({(0,): [(-0.3, 0.4)]})
    rep = rp.holes_identity_check(holes, region, 0.0, 1.0, 400, rng)
    assert rep.lhs == pytest.approx(1.0)
    assert rep.rhs == pytest.approx(1.0)


def test_holes_identity_periodic_cut_factor():
    rng = chain_generator(14, 2)
    region = SpaceTimeRegion.finite_beta(Box(1, 0), 2.0)
    holes = Holes.of({(0,): [(-0.3, 0.4)]})
    rep = rp.holes_identity_check(holes, region, 0.0, 1.0, 6000, rng)
    assert rep.params["m_p"] == 1
    assert rep.agrees(3.0)


def test_holes_identity_with_coupling():
    rng = chain_generator(14, 3)
    region = SpaceTimeRegion(Box(1, 1, "even-side"), 2.0, "f", "f")
    holes = Holes.of({(0,): [(-0.2, 0.5)]})
    rep = rp.holes_identity_check(holes, region, 1.0, 1.0, 20000, rng)
    assert rep.agrees(3.0)
    # the identity with the printed constant misses the shadow factor
    assert abs(rep.extra["printed_residual"]) > 10 * rep.se_lhs


def test_event_probability_identity():
    rng = chain_generator(14, 4)
    region = SpaceTimeRegion.finite_beta(Box(1, 1), 1.0, "f", "p")
    holes = Holes.of({(0,): [(-0.25, 0.25)]})
    rep = rp.event_probability_identity(holes, region, 1.0, 1.0, 15000, rng)
    assert rep.agrees(3.0)
    assert 0.0 <= rep.lhs <= 1.0


def test_event_probability_zero_coupling_exact():
    rng = chain_generator(14, 5)
    region = SpaceTimeRegion(Box(1, 1), 1.0, "f", "f")
    holes = Holes.of({(0,): [(-0.25, 0.25)]})
    rep = rp.event_probability_identity(holes, region, 0.0, 1.0, 500, rng)
    assert rep.lhs == pytest.approx(1.0)
    assert rep.rhs == pytest.approx(1.0)
