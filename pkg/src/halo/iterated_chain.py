"""Majorant chains for the iterated directional maximal operator M_1 ... M_n.

Starting from E_0 = E, each step applies the one-dimensional engine along one
axis to χ_{E_j} + α_j χ_{E_j^c} and keeps the exact superlevel set at
α_{j+1}, where α_j = 1 - (1 - α_1)^j.  Box unions are closed under this
operation, so the whole chain stays in exact rational arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core_geom import Box, BoxSet, IntervalSet, _boxes_from_grid, as_scalar
from .maximal_1d import MixedIndicator, reduced_level, superlevel_mixed


@dataclass(frozen=True)
class AlphaChain:
    alpha1: Fraction
    n: int

    def __post_init__(self):
        object.__setattr__(self, "alpha1", as_scalar(self.alpha1))
        if not 0 < self.alpha1 < 1:
            raise ValueError(f"alpha1 must lie in (0, 1), got {self.alpha1}")
        if self.n < 1:
            raise ValueError("chain length must be positive")

    @property
    def thresholds(self) -> list[Fraction]:
        """[α_0, α_1, ..., α_n] with α_0 = 0."""
        return [1 - (1 - self.alpha1) ** j for j in range(self.n + 1)]

    def step_ratios(self) -> list[Fraction]:
        """(1 - α_{j+1}) / (α_{j+1} - α_j) for j = 0..n-1; all equal (1 - α_1)/α_1."""
        a = self.thresholds
        return [(1 - a[j + 1]) / (a[j + 1] - a[j]) for j in range(self.n)]

    @property
    def bound_factor(self) -> Fraction:
        return (1 + 4 * (1 - self.alpha1) / self.alpha1) ** self.n


def fiber_decompose(S: BoxSet, axis: int) -> list[tuple[Box | None, IntervalSet]]:
    """Split S into cells of the complementary coordinates with constant fibers along `axis`.

    Cells are (n-1)-dimensional boxes (None when n = 1).  Only cells with a
    nonempty fiber are returned; adjacent cells with equal fibers are merged.
    """
    if not 0 <= axis < S.dim:
        raise IndexError(f"axis {axis} out of range for dimension {S.dim}")
    if S.is_empty():
        return []
    cuts, mask = S.grid
    if S.dim == 1:
        return [(None, S.to_interval_set())]
    moved = np.moveaxis(mask, axis, -1)
    other = [c for k, c in enumerate(cuts) if k != axis]
    axis_cuts = cuts[axis]
    # label each cell of the complementary grid by its fiber pattern
    patterns: dict[bytes, int] = {}
    labels = np.zeros(moved.shape[:-1], dtype=np.int64)
    for idx in np.ndindex(*moved.shape[:-1]):
        key = moved[idx].tobytes()
        labels[idx] = patterns.setdefault(key, len(patterns))
    out = []
    for key, label in sorted(patterns.items(), key=lambda kv: kv[1]):
        row = np.frombuffer(key, dtype=bool)
        if not row.any():
            continue
        fiber = IntervalSet((axis_cuts[i], axis_cuts[i + 1]) for i in np.flatnonzero(row))
        for cell in _boxes_from_grid(other, labels == label):
            out.append((cell, fiber))
    out.sort(key=lambda cf: cf[0].sides)
    return out


def _extrude(cell: Box | None, fiber: IntervalSet, axis: int) -> list[list[tuple]]:
    out = []
    for iv in fiber:
        if cell is None:
            out.append([(iv.lo, iv.hi)])
        else:
            bounds = cell.bounds()
            bounds.insert(axis, (iv.lo, iv.hi))
            out.append(bounds)
    return out


def chain_step(S: BoxSet, gamma, alpha, axis: int) -> BoxSet:
    """{x : M_axis(χ_S + γ χ_{S^c})(x) > α} for a box union S."""
    gamma, alpha = as_scalar(gamma), as_scalar(alpha)
    reduced_level(alpha, gamma)
    raw = []
    for cell, fiber in fiber_decompose(S, axis):
        level = superlevel_mixed(MixedIndicator(fiber, gamma), alpha)
        raw.extend(_extrude(cell, level.set, axis))
    return BoxSet(S.dim, raw)


@dataclass
class ChainTrace:
    dim: int
    alpha1: Fraction
    axes: tuple[int, ...]
    sets: list[BoxSet] = field(default_factory=list)  # E_0 = E, E_1, ..., E_n

    @property
    def measures(self) -> list[Fraction]:
        return [s.measure for s in self.sets]

    @property
    def chain(self) -> AlphaChain:
        return AlphaChain(self.alpha1, self.dim)

    @property
    def bound_factor(self) -> Fraction:
        return self.chain.bound_factor

    def step_factor(self) -> Fraction:
        return 1 + 4 * (1 - self.alpha1) / self.alpha1

    def bounds_hold(self) -> bool:
        """|E_j| <= (1 + 4(1-α_1)/α_1)^j |E| for every j, exactly."""
        if not self.sets:
            return True
        base = self.sets[0].measure
        q = self.step_factor()
        return all(m <= q ** j * base for j, m in enumerate(self.measures))

    @property
    def final(self) -> BoxSet:
        return self.sets[-1]


def run_chain(E: BoxSet, alpha1, axes: Sequence[int] | None = None) -> ChainTrace:
    """Run E_{j+1} = chain_step(E_j, α_j, α_{j+1}, axes[j]) for j = 0..n-1."""
    chain = AlphaChain(alpha1, E.dim)
    axes = tuple(range(E.dim)) if axes is None else tuple(axes)
    if sorted(axes) != list(range(E.dim)):
        raise ValueError(f"axes {axes} must be a permutation of 0..{E.dim - 1}")
    trace = ChainTrace(E.dim, chain.alpha1, axes)
    if E.measure == 0:
        return trace
    a = chain.thresholds
    current = E
    trace.sets.append(current)
    for j, axis in enumerate(axes):
        current = chain_step(current, a[j], a[j + 1], axis)
        trace.sets.append(current)
    return trace


def theorem2_bound(alpha: float, n: int) -> float:
    """(1 + 4 ρ/(1 - ρ))^n with ρ = (1 - α)^{1/n}; exact rational when n = 1 and α is a Fraction."""
    if n < 1:
        raise ValueError("dimension must be positive")
    if n == 1 and isinstance(alpha, Fraction):
        if not 0 < alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        return 1 + 4 * (1 - alpha) / alpha
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    rho = (1 - alpha) ** (1 / n)
    return (1 + 4 * rho / (1 - rho)) ** n


def theorem2_bound_eps(eps: float, n: int) -> float:
    """theorem2_bound written in ε = 1 - α, which avoids cancellation as α → 1."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    rho = eps ** (1 / n)
    return (1 + 4 * rho / (1 - rho)) ** n


# ---------------------------------------------------------------------------
# sampled lower bounds for the iterated operator


def _grid_maximal(values: np.ndarray, chunk: int = 16) -> np.ndarray:
    """Brute-force maximal averages along the last axis over all runs of whole cells.

    out[..., k] = max over i <= k <= j of mean(values[..., i:j+1]).
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 2 and values.shape[0] > chunk:
        return np.concatenate([_grid_maximal(values[s:s + chunk], chunk)
                               for s in range(0, values.shape[0], chunk)])
    N = values.shape[-1]
    prefix = np.concatenate([np.zeros(values.shape[:-1] + (1,)), np.cumsum(values, axis=-1)], axis=-1)
    i = np.arange(N)[:, None]
    j = np.arange(N)[None, :]
    length = np.where(j >= i, j - i + 1, 1)
    # avg[..., i, j] = mean over cells i..j
    avg = (prefix[..., None, 1:] - prefix[..., :-1, None]) / length
    avg = np.where(j >= i, avg, -np.inf)
    # best over j >= k, then over i <= k
    suffix = np.maximum.accumulate(avg[..., ::-1], axis=-1)[..., ::-1]
    masked = np.where(i <= j, suffix, -np.inf)  # rows i, columns k
    return masked.max(axis=-2)


def fiber_cell_means(fiber: IntervalSet, edges: np.ndarray) -> np.ndarray:
    """Exact (float) mean of χ_fiber over each cell [edges[k], edges[k+1]]."""
    out = np.zeros(len(edges) - 1)
    for iv in fiber:
        lo, hi = float(iv.lo), float(iv.hi)
        out += np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0, None)
    return out / np.diff(edges)


def sampled_iterated_2d(E: BoxSet, edges: Sequence[np.ndarray], axes: Sequence[int] = (0, 1)) -> np.ndarray:
    """Cellwise lower bounds for the iterated maximal function of χ_E on a 2D grid.

    Pass one takes, within each grid strip orthogonal to axes[0], the minimum
    over the fibers of E meeting that strip of the brute-force grid maximal
    function; pass two applies the brute-force maximal function along
    axes[1] to those cell values.  The result is a lower bound valid at every
    point of each cell.
    """
    if E.dim != 2:
        raise ValueError("two-dimensional sets only")
    if sorted(axes) != [0, 1]:
        raise ValueError("axes must be a permutation of (0, 1)")
    first = axes[0]
    other = 1 - first
    along, across = edges[first], edges[other]
    fibers = fiber_decompose(E, first)
    cache: dict[IntervalSet, np.ndarray] = {}
    lower = np.zeros((len(across) - 1, len(along) - 1))
    for r in range(len(across) - 1):
        lo, hi = across[r], across[r + 1]
        best = None
        covered = 0.0
        for cell, fiber in fibers:
            side = cell.sides[0]
            a, b = float(side.lo), float(side.hi)
            overlap = min(b, hi) - max(a, lo)
            if overlap <= 0:
                continue
            covered += overlap
            if fiber not in cache:
                cache[fiber] = _grid_maximal(fiber_cell_means(fiber, along))
            m = cache[fiber]
            best = m if best is None else np.minimum(best, m)
        if best is None or covered < (hi - lo) * (1 - 1e-12):
            # some fiber in this strip misses E entirely, so zero is the only safe bound
            best = np.zeros(len(along) - 1)
        lower[r] = best
    # lower[r, k]: strip r across, cell k along the first axis; now run along the second axis
    result = _grid_maximal(lower.T)
    return result if first == 0 else result.T
