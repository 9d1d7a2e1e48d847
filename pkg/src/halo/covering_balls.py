"""Greedy ball selection with cover and density certificates for M_HL,b.

Volumes are estimated by Monte Carlo with common random numbers: every ball
draws its own fixed sample cloud (seeded from the family seed and the ball's
input index) and all queries about that ball reuse it.  Threshold decisions
whose margin is inside the 3σ band are flagged and resolved toward selection.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core_geom import Ball, BoxSet, fraction_band, sample_ball

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 100_000


def _ball_seed(seed: int, index: int) -> int:
    return (seed * 1_000_003 + index) % (2 ** 63)


@dataclass
class DensityBallFamily:
    """Balls with density in E above α, sorted by nonincreasing volume (ties by input index)."""

    dim: int
    E: BoxSet
    alpha: float
    balls: list[Ball]
    input_index: list[int]
    density: np.ndarray
    density_band: np.ndarray
    seed: int = 0
    samples: int = DEFAULT_SAMPLES
    _clouds: list[np.ndarray] = field(default_factory=list, repr=False)
    _in_E: list[np.ndarray] = field(default_factory=list, repr=False)

    @classmethod
    def build(cls, E: BoxSet, balls: Sequence[Ball], alpha: float, *, seed: int = 0,
              samples: int = DEFAULT_SAMPLES, drop_sparse: bool = False) -> "DensityBallFamily":
        if not balls:
            raise ValueError("empty ball family")
        if not 0 < alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        for b in balls:
            if b.dim != E.dim:
                raise ValueError("ball dimension does not match E")
        order = sorted(range(len(balls)), key=lambda i: (-balls[i].radius, i))
        kept, clouds, in_E, dens, band = [], [], [], [], []
        for i in order:
            pts = sample_ball(balls[i], samples, _ball_seed(seed, i))
            hits = E.contains_points(pts)
            p = hits.mean()
            err = fraction_band(int(hits.sum()), samples)
            if p <= alpha:
                if drop_sparse:
                    log.info("dropping ball %d with density %.4f <= %.4f", i, p, alpha)
                    continue
                raise ValueError(f"ball {i} has sampled density {p:.4f} not above alpha={alpha}")
            if p - err <= alpha:
                log.debug("ball %d density %.4f within band of alpha", i, p)
            kept.append(i)
            clouds.append(pts)
            in_E.append(hits)
            dens.append(p)
            band.append(err)
        if not kept:
            raise ValueError("no ball has density above alpha")
        return cls(E.dim, E, float(alpha), [balls[i] for i in kept], kept,
                   np.array(dens), np.array(band), seed, samples, clouds, in_E)

    def __len__(self):
        return len(self.balls)

    def cloud(self, j: int) -> np.ndarray:
        return self._clouds[j]

    def cloud_in_E(self, j: int) -> np.ndarray:
        return self._in_E[j]

    def scaled(self, lam: float) -> "DensityBallFamily":
        """The same family dilated by lam about the origin (E must be rescaled by the caller)."""
        return DensityBallFamily(self.dim, self.E, self.alpha, [b.scaled(lam) for b in self.balls],
                                 list(self.input_index), self.density.copy(), self.density_band.copy(),
                                 self.seed, self.samples, [c * lam for c in self._clouds],
                                 [m.copy() for m in self._in_E])


@dataclass
class SelectionResult:
    selected: list[int]            # positions in the sorted family
    delta: float
    dilation: float                # 1 + 2 δ^{1/n}
    overlap_fraction: list[float]  # sampled |B_j ∩ union of earlier selections| / |B_j|, every j
    overlap_band: list[float]
    flagged: list[int]
    piece_volume: list[float]      # |Ẽ_j| for selected j, same order as `selected`
    piece_band: list[float]
    piece_density: list[float]     # |E ∩ Ẽ_j| / |Ẽ_j|
    piece_density_band: list[float]
    piece_E_volume: list[float]    # |E ∩ Ẽ_j|

    def is_selected(self, j: int) -> bool:
        return j in set(self.selected)


def _covered_by(points: np.ndarray, balls: Sequence[Ball]) -> np.ndarray:
    out = np.zeros(points.shape[0], dtype=bool)
    for b in balls:
        out |= b.contains_points(points)
    return out


def cf_select(family: DensityBallFamily, delta: float) -> SelectionResult:
    """Scan the sorted family and keep B_j when |B_j ∩ ∪ selected| <= (1 - δ)|B_j|."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    n = family.dim
    N = family.samples
    selected: list[int] = []
    fractions, bands, flagged = [], [], []
    pieces, piece_bands, piece_dens, piece_dens_band, piece_E = [], [], [], [], []
    for j, ball in enumerate(family.balls):
        pts = family.cloud(j)
        covered = _covered_by(pts, [family.balls[k] for k in selected])
        hits = int(covered.sum())
        frac = hits / N
        band = fraction_band(hits, N) if selected else 0.0
        fractions.append(frac)
        bands.append(band)
        threshold = 1 - delta
        take = frac <= threshold
        if selected and abs(frac - threshold) <= band:
            flagged.append(j)
            take = True
        if not take:
            continue
        selected.append(j)
        free = ~covered
        free_count = int(free.sum())
        vol = ball.volume
        pieces.append(vol * free_count / N)
        piece_bands.append(vol * fraction_band(free_count, N))
        e_count = int((free & family.cloud_in_E(j)).sum())
        piece_E.append(vol * e_count / N)
        piece_dens.append(e_count / free_count if free_count else 0.0)
        piece_dens_band.append(fraction_band(e_count, free_count) if free_count else 1.0)
    return SelectionResult(selected, float(delta), 1 + 2 * delta ** (1 / n), fractions, bands,
                           flagged, pieces, piece_bands, piece_dens, piece_dens_band, piece_E)


@dataclass
class CoverReport:
    sample_count: int
    counterexamples: list[list[float]]
    witnesses: dict[int, list[int]]  # unselected ball -> selected balls whose dilates cover its samples

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def dilation_cover_check(family: DensityBallFamily, result: SelectionResult, *,
                         grid_points: int = 10_000, boundary_points: int = 64) -> CoverReport:
    """Check on samples that ∪ B_j ⊂ ∪ (1 + 2δ^{1/n}) B̃_k.

    Samples are a regular grid over the bounding box of the family plus points
    just inside each ball's boundary.
    """
    n = family.dim
    balls = family.balls
    lo = np.min([np.asarray(b.center) - b.radius for b in balls], axis=0)
    hi = np.max([np.asarray(b.center) + b.radius for b in balls], axis=0)
    per_axis = max(2, int(round(grid_points ** (1 / n))))
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    rim = []
    for b in balls:
        if n == 1:
            dirs = np.array([[-1.0], [1.0]])
        elif n == 2:
            t = np.linspace(0, 2 * math.pi, boundary_points, endpoint=False)
            dirs = np.stack([np.cos(t), np.sin(t)], axis=1)
        else:
            # Fibonacci sphere
            k = np.arange(boundary_points) + 0.5
            phi = np.arccos(1 - 2 * k / boundary_points)
            th = math.pi * (1 + 5 ** 0.5) * k
            dirs = np.stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)], axis=1)
        rim.append(np.asarray(b.center) + b.radius * (1 - 1e-9) * dirs)
    pts = np.concatenate([grid] + rim)
    in_family = _covered_by(pts, balls)
    dilated = [balls[k].dilate(result.dilation) for k in result.selected]
    inside_dilate = np.stack([d.contains_points(pts) for d in dilated]) if dilated else np.zeros((0, len(pts)), bool)
    covered = inside_dilate.any(axis=0) if dilated else np.zeros(len(pts), bool)
    bad = in_family & ~covered
    chosen = set(result.selected)
    witnesses: dict[int, list[int]] = {}
    for j, b in enumerate(balls):
        if j in chosen:
            continue
        mine = b.contains_points(pts)
        users = [result.selected[k] for k in range(len(dilated)) if (inside_dilate[k] & mine).any()]
        witnesses[j] = users
    return CoverReport(int(in_family.sum()), pts[bad].tolist(), witnesses)


def theorem3_bound(alpha: float, delta: float, n: int) -> float:
    """(1 + 2δ^{1/n})^n · δ / (δ - (1 - α)), valid for 1 - α < δ < 1."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not 1 - alpha < delta < 1:
        raise ValueError(f"delta={delta} outside the admissible window (1 - alpha, 1)")
    return (1 + 2 * delta ** (1 / n)) ** n * delta / (delta - (1 - alpha))


def optimal_delta(alpha: float, n: int) -> float:
    """δ = (1 - α)^{n/(n+1)}."""
    return (1 - alpha) ** (n / (n + 1))


def theorem3_bound_eps(eps: float, n: int) -> float:
    """theorem3_bound at the optimal δ, written in ε = 1 - α."""
    delta = eps ** (n / (n + 1))
    return (1 + 2 * delta ** (1 / n)) ** n * delta / (delta - eps)


@dataclass
class TauberianCertificate:
    upper: float          # (1 + 2δ^{1/n})^n Σ |Ẽ_j|
    upper_band: float
    theorem_bound: float  # theorem3_bound · |E|
    piece_sum: float
    piece_E_sum: float
    E_measure: float

    @property
    def holds(self) -> bool:
        return self.upper <= self.theorem_bound + self.upper_band


def tauberian_upper_from_selection(family: DensityBallFamily, result: SelectionResult) -> TauberianCertificate:
    n = family.dim
    alpha, delta = family.alpha, result.delta
    bound = theorem3_bound(alpha, delta, n)
    scale = result.dilation ** n
    total = float(sum(result.piece_volume))
    band = float(sum(result.piece_band))
    E_measure = float(family.E.measure)
    return TauberianCertificate(scale * total, scale * band, bound * E_measure, total,
                                float(sum(result.piece_E_volume)), E_measure)


def certificate_checks(family: DensityBallFamily, result: SelectionResult) -> dict[str, bool]:
    """Overlap rule, piece size and piece density, each within the sampling band."""
    delta, alpha = result.delta, family.alpha
    chosen = set(result.selected)
    flagged = set(result.flagged)
    overlap_ok = True
    for j, (frac, band) in enumerate(zip(result.overlap_fraction, result.overlap_band)):
        if j == 0:
            overlap_ok &= j in chosen
        elif j in chosen:
            overlap_ok &= frac <= 1 - delta + band
        else:
            overlap_ok &= frac > 1 - delta and j not in flagged
    size_ok = all(vol > delta * family.balls[j].volume - band
                  for j, vol, band in zip(result.selected, result.piece_volume, result.piece_band))
    floor = (delta - (1 - alpha)) / delta
    dens_ok = all(d >= floor - band for d, band in zip(result.piece_density, result.piece_density_band))
    return {"overlap_rule": bool(overlap_ok), "piece_size": bool(size_ok), "piece_density": bool(dens_ok)}
