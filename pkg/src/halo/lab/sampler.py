"""Sampled lower bounds for |{M χ_E > α}| / |E| over finite candidate families.

Everything is computed in grid-cell units on a window aligned to multiples of
the step.  E is rasterized to exact per-cell coverage fractions.  A candidate
counts as dense when a lower bound on its density exceeds α.  For aligned
cubes and rectangles that lower bound is the exact density.  For balls it
counts only cells fully inside the ball.  For the uncentered kinds a cell is
counted when it lies entirely inside a dense candidate, so the counted
measure sits inside the true superlevel set.  The centered kinds are
evaluated at cell centers.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.signal import fftconvolve

from ..core_geom import BoxSet, as_scalar, unit_ball_volume
from ..iterated_chain import sampled_iterated_2d

KINDS = ("intervals", "balls", "cubes", "centered-balls", "centered-cubes", "rectangles", "iterated")

# density comparisons carry float sums; demand this much extra margin
DENSITY_SLACK = 1e-9


@dataclass(frozen=True)
class OperatorFamily:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.dim not in (1, 2, 3):
            raise ValueError(f"unsupported dimension {self.dim}")
        if (self.kind == "intervals") != (self.dim == 1):
            raise ValueError("the intervals family is exactly the one-dimensional family")
        if self.kind == "iterated" and self.dim != 2:
            raise ValueError("the iterated family is sampled in two dimensions only")

    @classmethod
    def parse(cls, label: str) -> "OperatorFamily":
        """'balls2d', 'centered-cubes3d', 'intervals1d', 'iterated2d', ..."""
        m = re.fullmatch(r"([a-z-]+?)([123])d", label.strip())
        if not m:
            raise ValueError(f"malformed family label {label!r}")
        return cls(m.group(1), int(m.group(2)))

    @property
    def label(self) -> str:
        return f"{self.kind}{self.dim}d"

    @property
    def centered(self) -> bool:
        return self.kind.startswith("centered")


@dataclass(frozen=True)
class Candidates:
    """Geometric size ladder: sizes round(ratio**k) cells, k = 0, 1, ..., up to the admissible maximum.

    ratio = 1 uses every integer size.  The ladder is a prefix of one fixed
    sequence, so raising the maximum only adds candidates.
    """

    ratio: float = 1.05
    max_cells: int | None = None

    def __post_init__(self):
        if self.ratio < 1:
            raise ValueError("ladder ratio must be >= 1")

    def sizes(self, limit: int) -> list[int]:
        if self.max_cells is not None:
            limit = min(limit, self.max_cells)
        if limit < 1:
            return []
        if self.ratio == 1:
            return list(range(1, limit + 1))
        out, k = [], 0
        while True:
            m = int(round(self.ratio ** k))
            if m > limit:
                break
            if not out or m != out[-1]:
                out.append(m)
            k += 1
        return out


@dataclass
class SweepRecord:
    alpha: float
    lower_ratio: float
    upper_bound: float | None
    family: str
    set_label: str
    grid: str
    candidates: int
    seed: int = 0
    extra: dict = field(default_factory=dict)


@dataclass
class Raster:
    origin: list[Fraction]   # lower corner of the window, per axis
    step: Fraction
    values: np.ndarray       # exact coverage fraction of each cell, as floats
    cells_in_E: Fraction     # |E| / step^n


def _margin_cells(E: BoxSet, family: OperatorFamily, alpha: float, step: Fraction) -> list[int]:
    n = E.dim
    mass = E.measure / step ** n
    if family.kind in ("rectangles", "iterated"):
        # a dense rectangle's side is at most the projection of E divided by α
        return [int(math.ceil(float((hi - lo) / step) / alpha)) + 1 for lo, hi in E.bounds()]
    if family.kind in ("balls", "centered-balls"):
        r = (float(mass) / (alpha * unit_ball_volume(n))) ** (1 / n)
        return [int(math.ceil(2 * r)) + 1] * n
    side = (float(mass) / alpha) ** (1 / n)
    return [int(math.ceil(side)) + 1] * n


def rasterize(E: BoxSet, step, margin_cells: list[int]) -> Raster:
    step = as_scalar(step)
    origin, counts = [], []
    for (lo, hi), m in zip(E.bounds(), margin_cells):
        a = (Fraction(math.floor(lo / step)) - m) * step
        b = (Fraction(math.ceil(hi / step)) + m) * step
        origin.append(a)
        counts.append(int((b - a) / step))
    values = np.zeros(counts)
    for box in E:
        parts = []
        for k, side in enumerate(box.sides):
            lo_cell = (side.lo - origin[k]) / step
            hi_cell = (side.hi - origin[k]) / step
            v = np.zeros(counts[k])
            for i in range(math.floor(lo_cell), math.ceil(hi_cell)):
                v[i] = float(min(hi_cell, i + 1) - max(lo_cell, i))
            parts.append(v)
        block = parts[0]
        for p in parts[1:]:
            block = np.multiply.outer(block, p)
        values += block
    return Raster(origin, step, values, E.measure / step ** E.dim)


def _block_sums(arr: np.ndarray, shape) -> np.ndarray:
    """Sums over every axis-aligned block of the given shape ('valid' positions)."""
    c = arr
    for k, m in enumerate(shape):
        c = np.cumsum(c, axis=k)
        pad = [(0, 0)] * c.ndim
        pad[k] = (1, 0)
        c = np.pad(c, pad)
        hi = [slice(None)] * c.ndim
        lo = [slice(None)] * c.ndim
        hi[k] = slice(m, None)
        lo[k] = slice(None, -m if m else None)
        c = c[tuple(hi)] - c[tuple(lo)]
    return c


def _dilate_blocks(starts: np.ndarray, shape) -> np.ndarray:
    """Cells covered by some block of `shape` whose lower corner is flagged in `starts`."""
    pad = [(m - 1, m - 1) for m in shape]
    return _block_sums(np.pad(starts.astype(float), pad), shape) > 0.5


def _ball_kernel(radius_cells: float, n: int) -> np.ndarray:
    """Cells lying entirely inside a ball of the given radius centered at the middle cell's center."""
    R = int(math.floor(radius_cells))
    offs = np.arange(-R, R + 1)
    grids = np.meshgrid(*([offs] * n), indexing="ij")
    far = sum((np.abs(g) + 0.5) ** 2 for g in grids)
    return (far <= radius_cells ** 2).astype(float)


def _uncentered_boxes(values, alpha, shapes):
    covered = np.zeros(values.shape, dtype=bool)
    for shape in shapes:
        if any(m > s for m, s in zip(shape, values.shape)):
            continue
        sums = _block_sums(values, shape)
        dense = sums > alpha * math.prod(shape) + DENSITY_SLACK
        if dense.any():
            covered |= _dilate_blocks(dense, shape)
    return covered


def _centered_cubes(values, alpha, sizes):
    best = np.zeros(values.shape, dtype=bool)
    for m in sizes:
        side = 2 * m - 1  # odd sides keep the cube centered on a cell
        if side > min(values.shape):
            break
        sums = _block_sums(values, (side,) * values.ndim)
        dense = sums > alpha * side ** values.ndim + DENSITY_SLACK
        pad = [(m - 1, m - 1)] * values.ndim
        best |= np.pad(dense, pad)
    return best


def _balls(values, alpha, radii, centered):
    n = values.ndim
    covered = np.zeros(values.shape, dtype=bool)
    for r in radii:
        K = _ball_kernel(r, n)
        if not K.any():
            continue
        sums = fftconvolve(values, K, mode="same")
        dense = sums > alpha * unit_ball_volume(n) * r ** n + DENSITY_SLACK
        if centered:
            covered |= dense
        elif dense.any():
            covered |= fftconvolve(dense.astype(float), K, mode="same") > 0.5
    return covered


def sampled_cover(E: BoxSet, family: OperatorFamily, alpha: float, step, candidates: Candidates | None = None,
                  margin: list[int] | None = None):
    """Boolean cell mask of the sampled superlevel set, with the raster it lives on."""
    if E.is_empty():
        raise ValueError("E must be nonempty")
    if family.dim != E.dim:
        raise ValueError("family dimension does not match E")
    if candidates is None:
        candidates = Candidates(1.0) if family.dim == 1 else Candidates()
    step = as_scalar(step)
    if step <= 0:
        raise ValueError("grid step must be positive")
    alpha_eff = min(float(alpha), 1.0)
    margin = margin or _margin_cells(E, family, max(alpha_eff, 1e-6), step)
    raster = rasterize(E, step, margin)
    values = raster.values
    n = E.dim
    if alpha_eff >= 1:
        # no average exceeds 1: only cells inside E can be counted, and only when full
        return raster, values >= 1.0, 0
    kind = family.kind
    if kind in ("intervals", "cubes"):
        sizes = candidates.sizes(max(margin))
        return raster, _uncentered_boxes(values, alpha_eff, [(m,) * n for m in sizes]), len(sizes)
    if kind == "rectangles":
        ladders = [candidates.sizes(m) for m in margin]
        shapes = [s for s in itertools.product(*ladders)
                  if math.prod(s) * alpha_eff < float(raster.cells_in_E) + 1]
        return raster, _uncentered_boxes(values, alpha_eff, shapes), len(shapes)
    if kind == "centered-cubes":
        sizes = candidates.sizes(max(margin))
        return raster, _centered_cubes(values, alpha_eff, sizes), len(sizes)
    if kind in ("balls", "centered-balls"):
        radii = [m / 2 for m in candidates.sizes(max(margin)) if m >= 2]
        return raster, _balls(values, alpha_eff, radii, kind == "centered-balls"), len(radii)
    if kind == "iterated":
        edges = [np.array([float(o + i * step) for i in range(s + 1)]) for o, s in zip(raster.origin, values.shape)]
        low = sampled_iterated_2d(E, edges)
        return raster, low > alpha_eff + DENSITY_SLACK, 1
    raise ValueError(f"unsupported family {family.label}")


def sampled_superlevel_ratio(family: OperatorFamily, E: BoxSet, alpha: float, step,
                             candidates: Candidates | None = None, *, seed: int = 0,
                             set_label: str = "E", margin: list[int] | None = None) -> SweepRecord:
    """Lower bound for |{M χ_E > α}| / |E| from a finite candidate family on a grid."""
    raster, covered, count = sampled_cover(E, family, alpha, step, candidates, margin)
    ratio = float(int(covered.sum()) / raster.cells_in_E)
    return SweepRecord(float(alpha), ratio, None, family.label, set_label,
                       _format_step(as_scalar(step)), count, seed)


def _format_step(step: Fraction) -> str:
    return f"{step.numerator}/{step.denominator}"
