"""α-sweeps, slab sweeps and the level-one probe."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from ..core_geom import BoxSet, IntervalSet, as_scalar, unit_ball_volume
from ..covering_balls import optimal_delta, theorem3_bound
from ..iterated_chain import theorem2_bound
from ..maximal_1d import lemma1_bound, superlevel_indicator
from .sampler import (Candidates, OperatorFamily, SweepRecord, _format_step, _margin_cells,
                      sampled_superlevel_ratio)


@dataclass(frozen=True)
class SlabSpec:
    """[-L, L]^{n-1} × [-t, t], sampled away from its corners."""

    dim: int = 2
    half_thickness: Fraction = Fraction(1)
    half_length: Fraction = Fraction(100)

    @property
    def label(self) -> str:
        return f"slab{self.dim}d"

    @property
    def surface_factor(self) -> float:
        """Area of both long faces divided by |E|; ratio - 1 ≈ h · surface_factor."""
        return 1 / float(self.half_thickness)

    def as_boxset(self) -> BoxSet:
        L, t = self.half_length, self.half_thickness
        return BoxSet(self.dim, [[(-L, L)] * (self.dim - 1) + [(-t, t)]])


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("HALO_THREADS", "1")))
    except ValueError:
        return 1


def upper_bound_for(family: OperatorFamily, alpha: float) -> float | None:
    """The applicable proven Tauberian bound for this family at α, if any."""
    if not 0 < alpha < 1:
        return None
    if family.kind == "intervals":
        return float(lemma1_bound(as_scalar(alpha), 0))
    if family.kind in ("iterated", "rectangles", "cubes", "centered-cubes"):
        # cube and rectangle averages are dominated by the iterated directional operator
        return theorem2_bound(alpha, family.dim)
    if family.kind in ("balls", "centered-balls"):
        return theorem3_bound(alpha, optimal_delta(alpha, family.dim), family.dim)
    return None


def slab_sampled_ratio(spec: SlabSpec, alpha: float, step, candidates: Candidates | None = None) -> SweepRecord:
    """Lower bound for the ball superlevel ratio of a slab, measured on central columns.

    Ball densities are exact (ball-slab closed form, corners ignored).
    Candidate centers sit at cell centers, and every column is equivalent by
    translation invariance.  A cell counts when it lies inside a single dense
    ball.
    """
    if spec.dim not in (2, 3):
        raise ValueError("slab sweeps run in dimension 2 or 3")
    candidates = candidates or Candidates(1.02)
    n = spec.dim
    h = float(as_scalar(step))
    t = float(spec.half_thickness)
    # the fattest dense ball: |B ∩ slab| <= 2t · |B^{n-1}| r^{n-1}
    r_max = 2 * t * unit_ball_volume(n - 1) / (alpha * unit_ball_volume(n))
    radii = [m * h / 2 for m in candidates.sizes(int(math.ceil(2 * r_max / h)) + 1) if m >= 2]
    rho = h * math.sqrt(n - 1) / 2  # lateral corner distance of the column holding the center
    top = int(math.ceil((t + 2 * r_max) / h)) + 1
    covered = np.zeros(2 * top, dtype=bool)  # cells j in [-top, top)
    for r in radii:
        if r <= rho:
            continue
        w = math.sqrt(r * r - rho * rho)
        # centers at cell centers (j + 1/2) h, j >= 0 by symmetry
        js = np.arange(0, top)
        c = (js + 0.5) * h
        outside = _ball_outside_fractions(r, c, n, t)
        dense = outside < 1 - alpha - 1e-12
        for ci in c[dense]:
            a = int(math.ceil((ci - w) / h - 1e-12))
            b = int(math.floor((ci + w) / h + 1e-12))
            for lo_j, hi_j in ((a, b), (-b, -a)):
                lo_j, hi_j = max(lo_j, -top), min(hi_j, top)
                if hi_j > lo_j:
                    covered[lo_j + top:hi_j + top] = True
    ratio = float(covered.sum()) * h / (2 * t)
    rec = SweepRecord(float(alpha), ratio, upper_bound_for(OperatorFamily("balls", n), alpha),
                      f"balls{n}d", spec.label, _format_step(as_scalar(step)), len(radii))
    rec.extra["halo"] = (ratio - 1) / spec.surface_factor
    return rec


def _caps(r: float, a: np.ndarray, n: int) -> np.ndarray:
    a = np.clip(a, 0.0, 2 * r)
    if n == 2:
        return r * r * np.arccos(np.clip((r - a) / r, -1, 1)) - (r - a) * np.sqrt(np.maximum(2 * r * a - a * a, 0))
    return np.pi * a * a * (3 * r - a) / 3


def _ball_outside_fractions(r: float, c: np.ndarray, n: int, t: float) -> np.ndarray:
    """Vectorized ball_outside_fraction over center heights c."""
    return (_caps(r, c + r - t, n) + _caps(r, r - t - c, n)) / (unit_ball_volume(n) * r ** n)


def alpha_sweep(family: OperatorFamily, E: Union[BoxSet, IntervalSet, SlabSpec], alphas: Sequence[float], step,
                candidates: Candidates | None = None, *, exact_1d: bool = False, seed: int = 0,
                set_label: str = "E", workers: int | None = None) -> list[SweepRecord]:
    """One record per α, each paired with the applicable proven upper bound."""
    alphas = list(alphas)
    if any(not 0 < a < 1 for a in alphas):
        raise ValueError("levels must lie in (0, 1)")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("levels must be strictly increasing")
    if isinstance(E, IntervalSet):
        E = BoxSet.from_interval_set(E)

    def one(alpha):
        if isinstance(E, SlabSpec):
            if family.kind != "balls" or family.dim != E.dim:
                raise ValueError("slab sweeps are implemented for uncentered balls of matching dimension")
            return slab_sampled_ratio(E, alpha, step, candidates)
        if exact_1d:
            if family.kind != "intervals":
                raise ValueError("the exact engine covers the one-dimensional family only")
            res = superlevel_indicator(E.to_interval_set(), as_scalar(alpha))
            return SweepRecord(float(alpha), float(res.ratio), upper_bound_for(family, alpha),
                               family.label, set_label, "exact", 0, seed, {"ratio_exact": res.ratio})
        rec = sampled_superlevel_ratio(family, E, alpha, step, candidates, seed=seed, set_label=set_label,
                                       margin=margin)
        rec.upper_bound = upper_bound_for(family, alpha)
        return rec

    margin = None
    if not isinstance(E, SlabSpec) and not exact_1d:
        # one window for the whole sweep, sized for the smallest level
        margin = _margin_cells(E, family, alphas[0], as_scalar(step))
    workers = workers or thread_count()
    if workers == 1:
        return [one(a) for a in alphas]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = dict(zip(alphas, pool.map(one, alphas)))
    return [results[a] for a in alphas]


def theorem4_probe(E: BoxSet, family: OperatorFamily, alphas: Sequence[float], step,
                   candidates: Candidates | None = None) -> list[tuple[float, float]]:
    """(α, sampled |{M χ_E > α}| - |E|) along a ladder α → 1⁻."""
    recs = alpha_sweep(family, E, alphas, step, candidates)
    mass = float(E.measure)
    return [(r.alpha, (r.lower_ratio - 1) * mass) for r in recs]


def exact_excess_1d(E: IntervalSet, alpha) -> Fraction:
    """|{M χ_E > α}| - |E| from the exact engine."""
    return superlevel_indicator(E, as_scalar(alpha)).set.measure - E.measure


def dyadic_ladder(k_lo: int, k_hi: int) -> list[float]:
    """α = 1 - 2^-k for k = k_lo..k_hi."""
    return [1 - 2.0 ** -k for k in range(k_lo, k_hi + 1)]
