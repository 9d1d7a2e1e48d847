import math
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halo.core_geom import (Ball, Box, BoxSet, Interval, IntervalSet, MonteCarlo, Raster, as_scalar,
                            ball_slab_volume, boxset_canonicalize, cap_volume, format_scalar, region_ball_volume,
                            sample_ball)

from oracles import point_grid_membership, random_boxset_2d


# ---------------------------------------------------------------------------
# scalars


def test_scalar_parse_and_format():
    assert as_scalar("6/8") == F(3, 4)
    assert format_scalar(F(3)) == "3/1"
    assert format_scalar(as_scalar("-2/4")) == "-1/2"
    assert as_scalar("0.25") == F(1, 4)


def test_scalar_errors():
    with pytest.raises(ZeroDivisionError):
        as_scalar("1/0")
    with pytest.raises(ValueError):
        as_scalar("one/2")
    with pytest.raises(ValueError):
        as_scalar(float("nan"))


# ---------------------------------------------------------------------------
# interval sets


def test_touching_intervals_merge():
    s = IntervalSet([(0, 1)]) | IntervalSet([(1, 2)])
    assert s.pairs() == [(0, 2)]


def test_disjoint_intersection_empty():
    assert (IntervalSet([(0, 1)]) & IntervalSet([(2, 3)])).is_empty()


def test_difference_matches_grid_membership():
    d = IntervalSet([(0, 2)]) - IntervalSet([(1, 3)])
    assert d.pairs() == [(0, 1)]
    step = F(1, 64)
    for k in range(-64, 4 * 64):
        x = (k + F(1, 2)) * step  # cell midpoints avoid null boundary points
        assert d.contains(x) == (0 < x < 2 and not 1 < x < 3)


def test_interval_rejects_empty():
    with pytest.raises(ValueError):
        Interval(1, 1)


rationals = st.fractions(min_value=-8, max_value=8, max_denominator=16)


@st.composite
def interval_sets(draw, max_parts=5):
    pts = sorted(draw(st.lists(rationals, min_size=0, max_size=2 * max_parts, unique=True)))
    return IntervalSet([(pts[i], pts[i + 1]) for i in range(0, len(pts) - 1, 2)])


@given(interval_sets(), interval_sets())
def test_inclusion_exclusion(a, b):
    assert (a | b).measure == a.measure + b.measure - (a & b).measure
    assert (a - b).measure == a.measure - (a & b).measure
    assert (a & b).issubset(a) and a.issubset(a | b)


@given(st.lists(st.tuples(rationals, rationals), max_size=6), st.randoms(use_true_random=False))
def test_interval_canonical_order_independent(raw, rnd):
    raw = [(min(p), max(p)) for p in raw if p[0] != p[1]]
    shuffled = list(raw)
    rnd.shuffle(shuffled)
    a, b = IntervalSet(raw), IntervalSet(shuffled)
    assert a == b and a.pairs() == b.pairs()
    assert IntervalSet(a.pairs()) == a
    # canonical: sorted with positive gaps
    for (_, h), (l2, _) in zip(a.pairs(), a.pairs()[1:]):
        assert h < l2


@given(interval_sets(), st.fractions(min_value=F(1, 8), max_value=8, max_denominator=8), rationals)
def test_interval_measure_dilation(a, lam, c):
    assert a.scale(lam).translate(c).measure == lam * a.measure


# ---------------------------------------------------------------------------
# box sets


def test_identical_boxes_collapse():
    s = boxset_canonicalize([[(0, 1), (0, 1)], [(0, 1), (0, 1)]])
    assert len(s) == 1 and s.measure == 1


def test_overlapping_squares_measure():
    s = boxset_canonicalize([[(0, 2), (0, 2)], [(1, 3), (1, 3)]])
    assert s.measure == 4 + 4 - 1
    boxes = list(s)
    for i, p in enumerate(boxes):
        for q in boxes[i + 1:]:
            assert (BoxSet(2, [p]) & BoxSet(2, [q])).measure == 0


def test_empty_canonicalize():
    s = boxset_canonicalize([], dim=2)
    assert s.is_empty() and s.measure == 0


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        boxset_canonicalize([[(0, 1)], [(0, 1), (0, 1)]])


def test_boxset_membership_on_grid():
    raw = [[(0, 2), (0, 2)], [(1, 3), (1, 3)]]
    s = boxset_canonicalize(raw)
    axes, member = point_grid_membership(s, F(1, 8))
    for i, x in enumerate(axes[0]):
        for j, y in enumerate(axes[1]):
            expect = any(lo0 < x < hi0 and lo1 < y < hi1 for (lo0, hi0), (lo1, hi1) in raw)
            assert member[i, j] == expect


def test_boxset_roundtrip_and_permutation():
    rng = random.Random(3)
    for _ in range(30):
        s = random_boxset_2d(rng)
        boxes = [b.bounds() for b in s]
        rng.shuffle(boxes)
        assert BoxSet(2, boxes) == s
        assert list(BoxSet(2, boxes)) == list(s)
        assert BoxSet(2, [b.bounds() for b in s]).measure == s.measure


def test_boxset_ops_inclusion_exclusion():
    rng = random.Random(4)
    for _ in range(30):
        a, b = random_boxset_2d(rng), random_boxset_2d(rng)
        assert (a | b).measure == a.measure + b.measure - (a & b).measure
        assert (a - b).measure + (a & b).measure == a.measure


def test_boxset_translate_scale():
    rng = random.Random(5)
    for _ in range(20):
        a = random_boxset_2d(rng)
        lam = F(rng.randint(1, 9), rng.randint(1, 9))
        moved = a.scale(lam).translate([F(1, 3), F(-2, 7)])
        assert moved.measure == lam ** 2 * a.measure


def test_contains_points_matches_exact():
    rng = random.Random(6)
    s = random_boxset_2d(rng, max_boxes=5)
    pts = np.random.default_rng(0).uniform(-0.5, 3.5, size=(500, 2))
    vec = s.contains_points(pts)
    exact = [s.contains([F(x), F(y)]) for x, y in pts]
    assert vec.tolist() == exact


def test_box_to_interval_roundtrip():
    s = IntervalSet([(0, 1), (2, F(7, 3))])
    assert BoxSet.from_interval_set(s).to_interval_set() == s


def test_box_requires_nonempty_sides():
    with pytest.raises(ValueError):
        Box.from_bounds([(0, 1), (2, 2)])


# ---------------------------------------------------------------------------
# balls and volumes


def test_ball_inside_slab():
    b = Ball((0.0, 0.0), 0.5)
    assert ball_slab_volume(b, -1, 1, 1) == pytest.approx(math.pi / 4, rel=1e-14)


def test_ball_center_on_face():
    b = Ball((0.0, 1.0), 0.7)
    assert ball_slab_volume(b, -10, 1, 1) == pytest.approx(math.pi * 0.49 / 2, rel=1e-12)
    assert cap_volume(1.0, 1.0, 2) == pytest.approx(math.pi / 2, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3])
def test_cap_against_monte_carlo(n):
    # cap of height 0.5 in the unit ball, as a slab complement
    b = Ball((0.0,) * n, 1.0)
    pts = sample_ball(b, 1_000_000, seed=11)
    mc = b.volume * float(np.mean(pts[:, -1] > 0.5))
    assert cap_volume(1.0, 0.5, n) == pytest.approx(mc, rel=3e-3)
    assert b.volume - ball_slab_volume(b, -2, 0.5, n - 1) == pytest.approx(mc, rel=3e-3)


def test_ball_slab_invalid():
    with pytest.raises(ValueError):
        Ball((0.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        ball_slab_volume(Ball((0.0, 0.0), 1.0), 1, 1, 0)


@settings(max_examples=60)
@given(st.floats(-2, 2), st.floats(0.1, 2), st.floats(-1, 1), st.floats(0.01, 2), st.floats(0, 1),
       st.sampled_from([2, 3]))
def test_ball_slab_monotone_and_continuous(c, r, lo, width, extra, n):
    b = Ball((0.0,) * (n - 1) + (c,), r)
    v = ball_slab_volume(b, lo, lo + width, n - 1)
    assert 0 <= v <= b.volume * (1 + 1e-12)
    assert ball_slab_volume(b, lo - extra, lo + width + extra, n - 1) >= v - 1e-12
    bumped = ball_slab_volume(Ball(b.center, r + 1e-6), lo, lo + width, n - 1)
    assert abs(bumped - v) < 1e-4


def test_region_disjoint_and_containing():
    ball = Ball((0.0, 0.0), 0.5)
    far = BoxSet(2, [[(5, 6), (5, 6)]])
    big = BoxSet(2, [[(-1, 1), (-1, 1)]])
    for est in (MonteCarlo(seed=1, samples=20_000), Raster(0.01)):
        e = region_ball_volume(ball, far, est)
        assert e.lo <= 0 <= e.hi
        e = region_ball_volume(ball, big, est)
        assert e.lo <= ball.volume <= e.hi


def test_quarter_disk():
    e = region_ball_volume(Ball((0.0, 0.0), 1.0), BoxSet(2, [[(0, 1), (0, 1)]]), MonteCarlo(seed=2, samples=1_000_000))
    assert abs(e.value - math.pi / 4) <= e.error
    r = region_ball_volume(Ball((0.0, 0.0), 1.0), BoxSet(2, [[(0, 1), (0, 1)]]), Raster(1 / 512))
    assert abs(r.value - math.pi / 4) <= r.error


def test_region_union_of_balls():
    ball = Ball((0.0, 0.0), 1.0)
    e = region_ball_volume(ball, [Ball((0.0, 0.0), 1.0), Ball((5.0, 0.0), 1.0)], MonteCarlo(samples=10_000))
    assert e.value == pytest.approx(math.pi)


def test_monte_carlo_deterministic():
    ball = Ball((0.3, 0.1), 0.8)
    region = BoxSet(2, [[(0, 1), (0, 1)]])
    a = region_ball_volume(ball, region, MonteCarlo(seed=5, samples=10_000))
    b = region_ball_volume(ball, region, MonteCarlo(seed=5, samples=10_000))
    assert a == b
