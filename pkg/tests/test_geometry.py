import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraccond.errors import ConstructionInfeasible, InvalidArgument
from fraccond.geometry import (IntervalSet, WindowConfig, choose_omega, dilate, distance, gaps,
                               select_epsilon, separation_predicate)

from conftest import canonical_config


def iset(*pairs):
    return IntervalSet(list(pairs))


# random finite unions of intervals inside [-10, 10]
intervals = st.lists(
    st.tuples(st.floats(-10, 10), st.floats(0.01, 3)).map(lambda t: (t[0], t[0] + t[1])),
    min_size=1, max_size=5).map(IntervalSet)


def test_normalization_merges_touching_and_overlapping():
    S = IntervalSet([(2, 3), (0, 1), (1, 1.5), (2.5, 4)])
    assert S.intervals == ((0.0, 1.5), (2.0, 4.0))
    assert S.measure == pytest.approx(3.5)


def test_rejects_degenerate_interval():
    with pytest.raises(InvalidArgument):
        IntervalSet([(1, 1)])
    with pytest.raises(InvalidArgument):
        IntervalSet([(0, math.inf)])


def test_dilate_examples():
    assert dilate(iset((0, 1)), 0.5).intervals == ((-0.5, 1.5),)
    assert not dilate(IntervalSet.empty(), 0.3)
    merged = dilate(iset((0, 1), (1.2, 2)), 0.2)
    assert merged.intervals == ((-0.2, 2.2),)


@pytest.mark.parametrize("delta", [0.0, -0.1])
def test_dilate_rejects_nonpositive(delta):
    with pytest.raises(InvalidArgument):
        dilate(iset((0, 1)), delta)


def test_distance_examples():
    assert distance(iset((0, 1)), iset((2, 3))) == 1
    assert distance(iset((0, 1)), iset((0.5, 2))) == 0
    assert distance(iset((0, 1), (5, 6)), iset((2.5, 3))) == 1.5
    with pytest.raises(InvalidArgument):
        distance(IntervalSet.empty(), iset((0, 1)))


def test_gaps_of_canonical_obstacles():
    cfg = canonical_config()
    g = gaps(cfg.omega_dom | cfg.windows, cfg.box)
    assert g.intervals == ((-4, -2), (-1.5, -1), (1, 1.5), (2, 4))


def test_choose_omega_tie_goes_left():
    # gaps (-4,-2) and (2,4) are equally long; the leftmost wins
    om = choose_omega(canonical_config())
    assert om.intervals[0] == pytest.approx((-10 / 3, -8 / 3))


def test_choose_omega_largest_gap():
    cfg = WindowConfig(iset((-1, 1)), iset((1.5, 2)), iset((-2, -1.5)), (-3.5, 4))
    assert choose_omega(cfg).intervals[0] == pytest.approx((8 / 3, 10 / 3))


def test_choose_omega_infeasible_when_only_slivers_remain():
    # domain and windows tile the box up to slivers of width 0.01
    cfg = WindowConfig(iset((-3.9, 3.5)), iset((3.5, 3.99)), iset((-3.99, -3.9)), (-4, 4))
    with pytest.raises(ConstructionInfeasible):
        choose_omega(cfg, min_gap=0.05)


def test_choose_omega_min_gap():
    with pytest.raises(ConstructionInfeasible):
        choose_omega(canonical_config(), min_gap=2.5)


def test_select_epsilon_canonical():
    cfg = canonical_config()
    om = iset((-10 / 3, -8 / 3))
    # terms: dist(dom, omega)/2 = 5/6, dist(dom, W) = 1/2, dist(omega, W) = 2/3, edge = 2/3
    eps = select_epsilon(cfg, om)
    assert eps == pytest.approx(0.18 * 0.5)
    assert separation_predicate(cfg, om, eps)[0]


def test_select_epsilon_zero_distance():
    cfg = WindowConfig(iset((-1, 1)), iset((1, 2)), iset((-2, -1.5)), (-4, 4))
    with pytest.raises(ConstructionInfeasible):
        select_epsilon(cfg, iset((3, 3.5)))


def test_select_epsilon_homogeneous():
    cfg = canonical_config()
    om = choose_omega(cfg)
    lam = 2.5
    big = WindowConfig(cfg.omega_dom.scaled(lam), cfg.w1.scaled(lam), cfg.w2.scaled(lam),
                       (lam * cfg.box[0], lam * cfg.box[1]))
    assert select_epsilon(big, om.scaled(lam)) == pytest.approx(lam * select_epsilon(cfg, om))


def test_window_config_validation():
    with pytest.raises(InvalidArgument):
        WindowConfig(iset((-1, 1)), iset((0.5, 2)), iset((-2, -1.5)), (-4, 4))
    with pytest.raises(InvalidArgument):
        WindowConfig(iset((-1, 1)), iset((1.5, 2)), iset((1.8, 2.5)), (-4, 4))
    with pytest.raises(InvalidArgument):
        WindowConfig(iset((-1, 1)), iset((1.5, 4.5)), iset((-2, -1.5)), (-4, 4))
    ok = WindowConfig(iset((-1, 1)), iset((1.5, 2)), iset((1.8, 2.5)), (-4, 4), allow_overlap=True)
    assert ok.windows.intervals == ((1.5, 2.5),)


@settings(max_examples=60, deadline=None)
@given(intervals, st.floats(0.01, 2), st.floats(0.01, 2))
def test_dilate_composition(S, a, b):
    twice = dilate(dilate(S, a), b)
    once = dilate(S, a + b)
    for lo, hi in once:
        assert twice.contains_interval(lo + 1e-9, hi - 1e-9, strict=False)
    if len(S) == 1:
        assert np.allclose(twice.intervals, once.intervals)


@settings(max_examples=60, deadline=None)
@given(intervals, st.floats(0.01, 1), st.floats(0.01, 1))
def test_dilate_monotone(S, a, b):
    small, large = dilate(S, min(a, b)), dilate(S, max(a, b))
    for lo, hi in small:
        assert large.contains_interval(lo, hi, strict=False)


@settings(max_examples=60, deadline=None)
@given(intervals, intervals, intervals)
def test_distance_symmetry_and_triangle_bound(S, T, U):
    assert distance(S, T) == distance(T, S)
    assert distance(S, U) <= distance(S, T) + T.diameter + distance(T, U) + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, -0.5), st.floats(0.5, 3), st.floats(0.1, 1.0), st.floats(0.1, 1.0),
       st.floats(0.2, 1.0))
def test_epsilon_predicate_holds(a, b, g1, g2, width):
    dom = iset((a, b))
    w1 = iset((b + g1, b + g1 + width))
    w2 = iset((a - g2 - width, a - g2))
    cfg = WindowConfig(dom, w1, w2, (a - g2 - width - 4, b + g1 + width + 1))
    om = choose_omega(cfg)
    eps = select_epsilon(cfg, om)
    big_dom, big_om = dilate(dom, 5 * eps), dilate(om, 5 * eps)
    assert not big_dom.overlaps(big_om)
    assert not (big_dom | big_om).overlaps(cfg.windows)
    assert om.lo > cfg.box[0] and om.hi < cfg.box[1]
