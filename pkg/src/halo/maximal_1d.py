"""Exact superlevel sets of the uncentered Hardy-Littlewood maximal operator on the line.

For an indicator of a finite union of intervals E, a point x has
M χ_E(x) > α iff some s < t around x has |E ∩ (s, t)| > α (t - s).  With
G(u) = |E ∩ (-∞, u]| - α u this reads G(t) > G(s), so x is in the
superlevel set iff  max_{t >= x} G(t) > min_{s <= x} G(s).  G is piecewise
linear with breakpoints at the endpoints of E, and on each piece the
condition reduces to a linear inequality solved in rational arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core_geom import Interval, IntervalSet, as_scalar


class AllOfLine(ValueError):
    """Raised when the requested superlevel set is the whole real line."""


@dataclass(frozen=True)
class MixedIndicator:
    """χ_E + γ χ_{E^c}."""

    base: IntervalSet
    floor: Fraction

    def __post_init__(self):
        object.__setattr__(self, "floor", as_scalar(self.floor))
        if not 0 <= self.floor < 1:
            raise ValueError(f"floor must lie in [0, 1), got {self.floor}")

    def average(self, s, t) -> Fraction:
        """Exact mean of the function over (s, t)."""
        s, t = as_scalar(s), as_scalar(t)
        if not s < t:
            raise ValueError("need s < t")
        inside = (self.base & IntervalSet.single(s, t)).measure
        return (inside + self.floor * (t - s - inside)) / (t - s)


@dataclass(frozen=True)
class SuperlevelResult:
    level: Fraction
    set: IntervalSet
    ratio: Fraction

    @property
    def measure(self) -> Fraction:
        return self.set.measure


def _check_level(alpha: Fraction) -> Fraction:
    alpha = as_scalar(alpha)
    if not 0 < alpha < 1:
        raise ValueError(f"level must lie in (0, 1), got {alpha}")
    return alpha


def superlevel_set(E: IntervalSet, alpha) -> IntervalSet:
    """{x : M χ_E(x) > α} as a canonical interval set (rising-sun sweep)."""
    alpha = _check_level(alpha)
    if E.is_empty():
        raise ValueError("E must be nonempty")
    pts = E.endpoints
    m = len(pts)
    # G at breakpoints; pieces alternate in-E / off-E starting in E
    G = [Fraction(0)] * m
    covered = Fraction(0)
    for i, x in enumerate(pts):
        if i > 0 and i % 2 == 1:
            covered += x - pts[i - 1]
        G[i] = covered - alpha * x
    left_min = G[:]
    for i in range(1, m):
        left_min[i] = min(left_min[i - 1], G[i])
    right_max = G[:]
    for i in range(m - 2, -1, -1):
        right_max[i] = max(right_max[i + 1], G[i])

    pieces: list[tuple[Fraction, Fraction]] = []
    # left ray: min over s <= x is G(x) itself, so the test is G(x) < max_{t >= p0} G
    pieces.append((pts[0] - (right_max[0] - G[0]) / alpha, pts[0]))
    for i in range(m - 1):
        p, q = pts[i], pts[i + 1]
        slope = 1 - alpha if i % 2 == 0 else -alpha
        g0, lc, rc = G[i], left_min[i], right_max[i + 1]
        # G(x) < rc  or  G(x) > lc  on (p, q)
        for target, below in ((rc, True), (lc, False)):
            xc = p + (target - g0) / slope
            if (slope > 0) == below:
                lo, hi = p, min(q, xc)
            else:
                lo, hi = max(p, xc), q
            if lo < hi:
                pieces.append((lo, hi))
    # right ray: max over t >= x is G(x), so the test is G(x) > min_{s <= p_last} G
    pieces.append((pts[-1], pts[-1] + (G[-1] - left_min[-1]) / alpha))
    return IntervalSet(pieces)


def superlevel_indicator(E: IntervalSet, alpha) -> SuperlevelResult:
    alpha = _check_level(alpha)
    s = superlevel_set(E, alpha)
    return SuperlevelResult(alpha, s, s.measure / E.measure)


def reduced_level(alpha, gamma) -> Fraction:
    """Density threshold equivalent to averages of χ_E + γχ_{E^c} exceeding α."""
    alpha, gamma = as_scalar(alpha), as_scalar(gamma)
    if alpha <= gamma:
        raise AllOfLine(f"level {alpha} does not exceed the floor {gamma}; the superlevel set is all of R")
    return (alpha - gamma) / (1 - gamma)


def superlevel_mixed(f: MixedIndicator, alpha) -> SuperlevelResult:
    alpha = _check_level(alpha)
    beta = reduced_level(alpha, f.floor)
    s = superlevel_set(f.base, beta)
    return SuperlevelResult(alpha, s, s.measure / f.base.measure)


def lemma1_bound(alpha, gamma=0) -> Fraction:
    """1 + 4(1 - α)/(α - γ), the Tauberian factor for χ_E + γχ_{E^c} on the line."""
    alpha, gamma = as_scalar(alpha), as_scalar(gamma)
    if not 0 <= gamma < alpha < 1:
        raise ValueError(f"need 0 <= gamma < alpha < 1, got gamma={gamma}, alpha={alpha}")
    return 1 + 4 * (1 - alpha) / (alpha - gamma)


def bounded_overlap_select(cover) -> list[Interval]:
    """Subfamily with the same union in which no point is covered more than twice.

    Greedy by left endpoint, discarding intervals already inside the running
    union, then repeatedly dropping any interval contained in the union of its
    two neighbours.
    """
    items = sorted((iv if isinstance(iv, Interval) else Interval(*iv) for iv in cover),
                   key=lambda iv: (iv.lo, -iv.hi))
    kept: list[Interval] = []
    union = IntervalSet()
    for iv in items:
        piece = IntervalSet([iv])
        if piece.issubset(union):
            continue
        kept.append(iv)
        union = union | piece
    # after the first pass left and right endpoints are both strictly increasing
    changed = True
    while changed and len(kept) >= 3:
        changed = False
        for i in range(1, len(kept) - 1):
            a, b, c = kept[i - 1], kept[i], kept[i + 1]
            if c.lo < a.hi and a.lo <= b.lo and b.hi <= c.hi:
                del kept[i]
                changed = True
                break
    return kept


def overlap_count(family, x) -> int:
    x = as_scalar(x)
    return sum(1 for iv in family if iv.contains(x))
