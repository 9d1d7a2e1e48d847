"""Exact interval/box set algebra and floating-point ball geometry.

Interval and box sets carry rational coordinates (``fractions.Fraction``) and
exact measures.  All sets are open; pieces that touch along a boundary are
merged, so two sets compare equal whenever they differ by a null set made of
finitely many boundary points.

Balls live in binary floating point.  Volumes involving balls are either
closed-form (ball against a slab) or estimated with an explicit error band.
"""
from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

ExactScalar = Fraction

SUPPORTED_DIMS = (1, 2, 3)


def as_scalar(value) -> Fraction:
    """Coerce ints, Fractions, floats and strings ("p/q", "0.25", "3") to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, (int, float)):
        if isinstance(value, float) and not math.isfinite(value):
            raise ValueError(f"non-finite scalar {value!r}")
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, _, den = text.partition("/")
            try:
                num_i, den_i = int(num), int(den)
            except ValueError:
                raise ValueError(f"malformed rational {value!r}") from None
            if den_i == 0:
                raise ZeroDivisionError(f"zero denominator in {value!r}")
            return Fraction(num_i, den_i)
        try:
            return Fraction(text)
        except ValueError:
            raise ValueError(f"malformed rational {value!r}") from None
    raise TypeError(f"cannot interpret {type(value).__name__} as an exact scalar")


def format_scalar(q: Fraction) -> str:
    """Serialize as "num/den", always with an explicit denominator."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# one dimension


@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", as_scalar(self.lo))
        object.__setattr__(self, "hi", as_scalar(self.hi))
        if not self.lo < self.hi:
            raise ValueError(f"empty interval ({self.lo}, {self.hi})")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return self.lo < x < self.hi

    def __repr__(self):
        return f"({self.lo}, {self.hi})"


def _canonical_intervals(items: Iterable) -> tuple[Interval, ...]:
    pieces = []
    for item in items:
        if isinstance(item, Interval):
            pieces.append(item)
        else:
            lo, hi = item
            lo, hi = as_scalar(lo), as_scalar(hi)
            if lo < hi:
                pieces.append(Interval(lo, hi))
    pieces.sort()
    merged: list[list[Fraction]] = []
    for iv in pieces:
        # touching pieces merge: the shared endpoint is a null set
        if merged and iv.lo <= merged[-1][1]:
            if iv.hi > merged[-1][1]:
                merged[-1][1] = iv.hi
        else:
            merged.append([iv.lo, iv.hi])
    return tuple(Interval(lo, hi) for lo, hi in merged)


class IntervalSet:
    """Finite union of disjoint, non-adjacent open intervals, sorted by left end."""

    __slots__ = ("intervals",)

    def __init__(self, intervals: Iterable = ()):
        self.intervals = _canonical_intervals(intervals)

    @classmethod
    def single(cls, lo, hi) -> "IntervalSet":
        return cls([(lo, hi)])

    @property
    def measure(self) -> Fraction:
        return sum((iv.length for iv in self.intervals), Fraction(0))

    @property
    def endpoints(self) -> list[Fraction]:
        return [x for iv in self.intervals for x in (iv.lo, iv.hi)]

    def is_empty(self) -> bool:
        return not self.intervals

    def bounds(self) -> tuple[Fraction, Fraction]:
        if not self.intervals:
            raise ValueError("empty set has no bounds")
        return self.intervals[0].lo, self.intervals[-1].hi

    def contains(self, x) -> bool:
        x = as_scalar(x)
        i = bisect.bisect_right([iv.lo for iv in self.intervals], x) - 1
        return i >= 0 and self.intervals[i].contains(x)

    def _combine(self, other: "IntervalSet", keep) -> "IntervalSet":
        cuts = sorted(set(self.endpoints) | set(other.endpoints))
        out = []
        for a, b in zip(cuts, cuts[1:]):
            mid = (a + b) / 2
            if keep(self.contains(mid), other.contains(mid)):
                out.append((a, b))
        return IntervalSet(out)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        return self._combine(other, lambda p, q: p and q)

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        return self._combine(other, lambda p, q: p and not q)

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def issubset(self, other: "IntervalSet") -> bool:
        return (self - other).is_empty()

    def translate(self, c) -> "IntervalSet":
        c = as_scalar(c)
        return IntervalSet((iv.lo + c, iv.hi + c) for iv in self.intervals)

    def scale(self, lam) -> "IntervalSet":
        lam = as_scalar(lam)
        if lam <= 0:
            raise ValueError("dilation factor must be positive")
        return IntervalSet((iv.lo * lam, iv.hi * lam) for iv in self.intervals)

    def pairs(self) -> list[tuple[Fraction, Fraction]]:
        return [(iv.lo, iv.hi) for iv in self.intervals]

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self.intervals == other.intervals

    def __hash__(self):
        return hash(self.intervals)

    def __repr__(self):
        if not self.intervals:
            return "IntervalSet(∅)"
        return "IntervalSet(" + " ∪ ".join(map(repr, self.intervals)) + ")"


# ---------------------------------------------------------------------------
# boxes


@dataclass(frozen=True, order=True)
class Box:
    sides: tuple[Interval, ...]

    def __post_init__(self):
        sides = tuple(s if isinstance(s, Interval) else Interval(*s) for s in self.sides)
        if not 1 <= len(sides) <= 3:
            raise ValueError(f"unsupported dimension {len(sides)}")
        object.__setattr__(self, "sides", sides)

    @classmethod
    def from_bounds(cls, bounds: Sequence) -> "Box":
        return cls(tuple(Interval(lo, hi) for lo, hi in bounds))

    @property
    def dim(self) -> int:
        return len(self.sides)

    @property
    def volume(self) -> Fraction:
        return math.prod((s.length for s in self.sides), start=Fraction(1))

    def contains(self, point) -> bool:
        return all(s.contains(as_scalar(x)) for s, x in zip(self.sides, point))

    def bounds(self) -> list[tuple[Fraction, Fraction]]:
        return [(s.lo, s.hi) for s in self.sides]

    def __repr__(self):
        return "×".join(map(repr, self.sides))


def _grid_from_boxes(boxes: Sequence[Box], dim: int, cuts=None):
    """Rasterize boxes onto the grid spanned by all their coordinates."""
    if cuts is None:
        cuts = [sorted({x for b in boxes for x in (b.sides[k].lo, b.sides[k].hi)}) for k in range(dim)]
    shape = tuple(max(len(c) - 1, 0) for c in cuts)
    mask = np.zeros(shape, dtype=bool)
    if mask.size == 0:
        return cuts, mask
    for b in boxes:
        idx = tuple(
            slice(bisect.bisect_left(cuts[k], b.sides[k].lo), bisect.bisect_left(cuts[k], b.sides[k].hi))
            for k in range(dim)
        )
        mask[idx] = True
    return cuts, mask


def _reduce_grid(cuts, mask):
    """Drop cuts that separate identical slices and trim empty margins.

    The reduced grid depends only on the point set (mod boundaries), which is
    what makes the canonical decomposition unique.
    """
    cuts = [list(c) for c in cuts]
    for k in range(mask.ndim):
        if mask.shape[k] == 0:
            continue
        moved = np.moveaxis(mask, k, 0)
        occupied = moved.reshape(moved.shape[0], -1).any(axis=1)
        if not occupied.any():
            return [[] for _ in cuts], np.zeros((0,) * mask.ndim, dtype=bool)
        first = int(np.argmax(occupied))
        last = len(occupied) - 1 - int(np.argmax(occupied[::-1]))
        moved = moved[first:last + 1]
        c = cuts[k][first:last + 2]
        keep = [0]
        for i in range(1, moved.shape[0]):
            if not np.array_equal(moved[i], moved[keep[-1]]):
                keep.append(i)
        moved = moved[keep]
        cuts[k] = [c[i] for i in keep] + [c[-1]]
        mask = np.moveaxis(moved, 0, k)
    return cuts, mask


def _boxes_from_grid(cuts, mask) -> list[Box]:
    cuts, mask = _reduce_grid(cuts, mask)
    if mask.size == 0 or not mask.any():
        return []
    out = []
    if mask.ndim == 1:
        run_start = None
        for i, flag in enumerate(list(mask) + [False]):
            if flag and run_start is None:
                run_start = i
            elif not flag and run_start is not None:
                out.append(Box((Interval(cuts[0][run_start], cuts[0][i]),)))
                run_start = None
        return out
    for i in range(mask.shape[0]):
        lower = _boxes_from_grid(cuts[1:], mask[i])
        side = Interval(cuts[0][i], cuts[0][i + 1])
        out.extend(Box((side,) + b.sides) for b in lower)
    return out


class BoxSet:
    """Finite union of open axis-parallel boxes, stored as a canonical disjoint family."""

    __slots__ = ("dim", "boxes", "_cuts", "_mask")

    def __init__(self, dim: int, boxes: Iterable = ()):
        if dim not in SUPPORTED_DIMS:
            raise ValueError(f"unsupported dimension {dim}")
        raw = [b if isinstance(b, Box) else Box.from_bounds(b) for b in boxes]
        for b in raw:
            if b.dim != dim:
                raise ValueError(f"box of dimension {b.dim} in a {dim}-dimensional set")
        self.dim = dim
        self.boxes = tuple(_boxes_from_grid(*_grid_from_boxes(raw, dim)))
        self._cuts, self._mask = _reduce_grid(*_grid_from_boxes(self.boxes, dim))

    @classmethod
    def from_interval_set(cls, s: IntervalSet) -> "BoxSet":
        return cls(1, [Box((iv,)) for iv in s])

    def to_interval_set(self) -> IntervalSet:
        if self.dim != 1:
            raise ValueError("only one-dimensional box sets are interval sets")
        return IntervalSet(b.sides[0] for b in self.boxes)

    @property
    def measure(self) -> Fraction:
        return sum((b.volume for b in self.boxes), Fraction(0))

    def is_empty(self) -> bool:
        return not self.boxes

    def bounds(self) -> list[tuple[Fraction, Fraction]]:
        if not self.boxes:
            raise ValueError("empty set has no bounds")
        return [(c[0], c[-1]) for c in self._cuts]

    @property
    def grid(self):
        """Reduced cut coordinates per axis and the boolean cell occupancy."""
        return self._cuts, self._mask

    def _combine(self, other: "BoxSet", op) -> "BoxSet":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        cuts = [sorted(set(a) | set(b)) for a, b in zip(self._cuts, other._cuts)]
        _, m1 = _grid_from_boxes(self.boxes, self.dim, cuts)
        _, m2 = _grid_from_boxes(other.boxes, self.dim, cuts)
        return BoxSet(self.dim, _boxes_from_grid(cuts, op(m1, m2)))

    def union(self, other: "BoxSet") -> "BoxSet":
        return self._combine(other, np.logical_or)

    def intersection(self, other: "BoxSet") -> "BoxSet":
        return self._combine(other, np.logical_and)

    def difference(self, other: "BoxSet") -> "BoxSet":
        return self._combine(other, lambda a, b: a & ~b)

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def issubset(self, other: "BoxSet") -> bool:
        return (self - other).is_empty()

    def translate(self, offset: Sequence) -> "BoxSet":
        off = [as_scalar(c) for c in offset]
        return BoxSet(self.dim, [[(lo + c, hi + c) for (lo, hi), c in zip(b.bounds(), off)] for b in self.boxes])

    def scale(self, lam) -> "BoxSet":
        lam = as_scalar(lam)
        if lam <= 0:
            raise ValueError("dilation factor must be positive")
        return BoxSet(self.dim, [[(lo * lam, hi * lam) for lo, hi in b.bounds()] for b in self.boxes])

    def contains(self, point) -> bool:
        """Membership in the open union (points on internal shared faces count as inside)."""
        return self._contains_exact([as_scalar(x) for x in point])

    def _contains_exact(self, point: list[Fraction]) -> bool:
        if self.is_empty():
            return False
        choices = []
        for x, c in zip(point, self._cuts):
            r = bisect.bisect_right(c, x) - 1
            l = bisect.bisect_left(c, x) - 1
            options = {l, r}
            if any(i < 0 or i >= len(c) - 1 for i in options):
                return False
            choices.append(sorted(options))
        return all(self._mask[idx] for idx in itertools.product(*choices))

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        """Vectorized open-union membership for float points of shape (m, dim)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(points.shape[0], dtype=bool)
        if self.is_empty():
            return out
        valid = np.ones(points.shape[0], dtype=bool)
        sides = []
        for k in range(self.dim):
            c = np.array([float(x) for x in self._cuts[k]])
            r = np.searchsorted(c, points[:, k], side="right") - 1
            l = np.searchsorted(c, points[:, k], side="left") - 1
            ncell = len(c) - 1
            valid &= (l >= 0) & (r >= 0) & (l < ncell) & (r < ncell)
            sides.append((np.clip(l, 0, max(ncell - 1, 0)), np.clip(r, 0, max(ncell - 1, 0))))
        out = valid.copy()
        for combo in itertools.product((0, 1), repeat=self.dim):
            idx = tuple(sides[k][combo[k]] for k in range(self.dim))
            out &= self._mask[idx]
        return out & valid

    def __iter__(self):
        return iter(self.boxes)

    def __len__(self):
        return len(self.boxes)

    def __eq__(self, other):
        return isinstance(other, BoxSet) and self.dim == other.dim and self.boxes == other.boxes

    def __hash__(self):
        return hash((self.dim, self.boxes))

    def __repr__(self):
        return f"BoxSet(dim={self.dim}, boxes={list(self.boxes)!r})"


def boxset_canonicalize(raw: Iterable, dim: int | None = None) -> BoxSet:
    """Canonical disjoint decomposition of a list of boxes (or bound lists)."""
    raw = [b if isinstance(b, Box) else Box.from_bounds(b) for b in raw]
    if dim is None:
        if not raw:
            raise ValueError("dimension required for an empty box list")
        dim = raw[0].dim
    return BoxSet(dim, raw)


# ---------------------------------------------------------------------------
# balls


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError(f"nonpositive radius {self.radius}")
        if len(self.center) not in SUPPORTED_DIMS:
            raise ValueError(f"unsupported dimension {len(self.center)}")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.dim) * self.radius ** self.dim

    def dilate(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)

    def scaled(self, lam: float) -> "Ball":
        return Ball(tuple(lam * c for c in self.center), lam * self.radius)

    def contains_points(self, points: np.ndarray) -> np.ndarray:
        d = np.atleast_2d(points) - np.asarray(self.center)
        return np.einsum("ij,ij->i", d, d) < self.radius ** 2


def cap_volume(radius: float, height: float, n: int) -> float:
    """Volume of the part of an n-ball beyond a hyperplane at depth `height` from the surface."""
    r = radius
    a = min(max(height, 0.0), 2 * r)
    if n == 1:
        return a
    if n == 2:
        # circular segment; clamp guards acos against rounding
        t = min(max((r - a) / r, -1.0), 1.0)
        return r * r * math.acos(t) - (r - a) * math.sqrt(max(2 * r * a - a * a, 0.0))
    if n == 3:
        return math.pi * a * a * (3 * r - a) / 3
    raise ValueError(f"unsupported dimension {n}")


def ball_slab_volume(ball: Ball, slab_lo: float, slab_hi: float, axis: int) -> float:
    """|B ∩ {slab_lo < x_axis < slab_hi}| in closed form."""
    if not slab_lo < slab_hi:
        raise ValueError("slab_lo must be below slab_hi")
    n, r = ball.dim, ball.radius
    c = ball.center[axis]
    full = ball.volume
    above = cap_volume(r, c + r - slab_hi, n)
    below = cap_volume(r, slab_lo - (c - r), n)
    return min(max(full - above - below, 0.0), full)


# ---------------------------------------------------------------------------
# sampled ball-region volumes


@dataclass(frozen=True)
class MonteCarlo:
    seed: int = 0
    samples: int = 100_000

    def __post_init__(self):
        if self.samples <= 0:
            raise ValueError("sample count must be positive")


@dataclass(frozen=True)
class Raster:
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("raster step must be positive")


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    error: float
    samples: int = field(default=0, compare=False)

    @property
    def lo(self) -> float:
        return self.value - self.error

    @property
    def hi(self) -> float:
        return self.value + self.error


Region = Union[BoxSet, Sequence[Ball]]


def region_contains(region: Region, points: np.ndarray) -> np.ndarray:
    if isinstance(region, BoxSet):
        return region.contains_points(points)
    points = np.atleast_2d(points)
    out = np.zeros(points.shape[0], dtype=bool)
    for b in region:
        out |= b.contains_points(points)
    return out


def sample_ball(ball: Ball, count: int, seed: int) -> np.ndarray:
    """Uniform points in the ball, reproducible from `seed`."""
    rng = np.random.default_rng(seed)
    n = ball.dim
    direction = rng.standard_normal((count, n))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radial = rng.random(count) ** (1.0 / n)
    return np.asarray(ball.center) + ball.radius * radial[:, None] * direction


def fraction_band(hits: int, total: int) -> float:
    """Three binomial standard deviations of a sampled fraction."""
    p = hits / total
    return 3.0 * math.sqrt(max(p * (1 - p), 0.25 / total) / total)


def region_ball_volume(ball: Ball, region: Region, estimator: MonteCarlo | Raster) -> VolumeEstimate:
    """Estimate |ball ∩ region| with a reported uncertainty."""
    if isinstance(estimator, MonteCarlo):
        pts = sample_ball(ball, estimator.samples, estimator.seed)
        hits = int(region_contains(region, pts).sum())
        vol = ball.volume
        return VolumeEstimate(vol * hits / estimator.samples,
                              vol * fraction_band(hits, estimator.samples), estimator.samples)
    if isinstance(estimator, Raster):
        h = estimator.step
        n = ball.dim
        axes = [np.arange(c - ball.radius, c + ball.radius + h, h) for c in ball.center]
        corners = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        flat = corners.reshape(-1, n)
        inside = (ball.contains_points(flat) & region_contains(region, flat)).reshape(corners.shape[:-1])
        centers = np.stack(np.meshgrid(*[a[:-1] + h / 2 for a in axes], indexing="ij"), axis=-1).reshape(-1, n)
        at_center = (ball.contains_points(centers) & region_contains(region, centers))
        # a cell is uncertain when its corners disagree
        view_all = np.ones([len(a) - 1 for a in axes], dtype=bool)
        view_any = np.zeros_like(view_all)
        for combo in itertools.product((0, 1), repeat=n):
            sl = tuple(slice(o, o + len(a) - 1) for o, a in zip(combo, axes))
            view_all &= inside[sl]
            view_any |= inside[sl]
        band = int((view_any & ~view_all).sum())
        cell = h ** n
        return VolumeEstimate(float(at_center.sum()) * cell, band * cell, centers.shape[0])
    raise TypeError(f"unknown estimator {estimator!r}")
