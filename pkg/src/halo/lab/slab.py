"""Halo height of the slab {|x_n| < 1} under balls and rotated cubes.

A convex body of scale s is pushed through a long face of the slab until the
part outside the slab reaches a (1 - α) fraction of its volume; h(α) is the
largest protrusion above the face over all scales.  Along the symmetry axis
the outside part is two caps (top and bottom face), so only the scale and
the height of the center matter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..core_geom import Ball, ball_slab_volume, cap_volume, unit_ball_volume

SHAPES = ("ball", "cube")


class OptimizerError(RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


def _irwin_hall_cdf(u: float, n: int) -> float:
    """Volume of {x in [0,1]^n : x_1 + ... + x_n <= u}."""
    if u <= 0:
        return 0.0
    if u >= n:
        return 1.0
    return sum((-1) ** k * math.comb(n, k) * (u - k) ** n for k in range(int(math.floor(u)) + 1)) / math.factorial(n)


@dataclass(frozen=True)
class Body:
    """A ball of radius `scale`, or a cube of side `scale` with a vertex pointing along the slab normal.

    In the plane the cube is the square turned by π/4; in space its body
    diagonal is normal to the face, so the part beyond a face near the vertex
    is a corner pyramid.
    """

    shape: str
    n: int

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.n not in (2, 3):
            raise ValueError("slab bodies live in dimension 2 or 3")

    def extent(self, s: float) -> float:
        return 2 * s if self.shape == "ball" else s * math.sqrt(self.n)

    def volume(self, s: float) -> float:
        return unit_ball_volume(self.n) * s ** self.n if self.shape == "ball" else s ** self.n

    def cap(self, s: float, height: float) -> float:
        height = min(max(height, 0.0), self.extent(s))
        if self.shape == "ball":
            return cap_volume(s, height, self.n)
        return s ** self.n * _irwin_hall_cdf(height * math.sqrt(self.n) / s, self.n)

    def outside_fraction(self, s: float, c: float, half_thickness: float = 1.0) -> float:
        e = self.extent(s) / 2
        top = self.cap(s, c + e - half_thickness)
        bottom = self.cap(s, e - half_thickness - c)
        return (top + bottom) / self.volume(s)


def ball_outside_fraction(r: float, c: float, n: int, half_thickness: float = 1.0) -> float:
    """Same as Body('ball', n).outside_fraction, via the ball-slab closed form."""
    b = Ball((0.0,) * (n - 1) + (c,), r)
    return 1 - ball_slab_volume(b, -half_thickness, half_thickness, n - 1) / b.volume


def protrusion(body: Body, s: float, alpha: float, half_thickness: float = 1.0) -> float:
    """Largest height above the face reachable at scale s, or -inf if no position is admissible."""
    budget = 1 - alpha
    e = body.extent(s) / 2
    f = lambda c: body.outside_fraction(s, c, half_thickness) - budget
    if f(0.0) > 0:
        return -math.inf
    c_hi = half_thickness + e
    if f(c_hi) <= 0:
        return c_hi + e - half_thickness
    # the outside fraction increases with c >= 0 (slices shrink away from the center)
    c = optimize.brentq(f, 0.0, c_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return c + e - half_thickness


@dataclass
class HaloHeight:
    alpha: float
    height: float
    scale: float
    center: float
    trace: list


def slab_halo_height(shape: str, n: int, alpha: float, *, half_thickness: float = 1.0,
                     grid: int = 81, tol: float = 1e-8, check_offaxis: bool = True,
                     seed: int = 0) -> HaloHeight:
    """Maximal protrusion h(α) for the given body over all scales."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    body = Body(shape, n)
    logs = np.linspace(math.log(1e-2), math.log(20.0), grid)
    values = np.array([protrusion(body, math.exp(t), alpha, half_thickness) for t in logs])
    trace = list(zip(np.exp(logs).tolist(), values.tolist()))
    if not np.isfinite(values).any():
        raise OptimizerError("no admissible scale found", trace)
    k = int(np.argmax(values))
    lo = logs[max(k - 1, 0)]
    hi = logs[min(k + 1, grid - 1)]
    res = optimize.minimize_scalar(lambda t: -protrusion(body, math.exp(t), alpha, half_thickness),
                                   bracket=(lo, logs[k], hi) if 0 < k < grid - 1 else None,
                                   method="golden", tol=tol)
    if not res.success:
        raise OptimizerError(f"golden-section search failed: {res.message}", trace)
    t_best = res.x if -res.fun >= values[k] else logs[k]
    s = math.exp(t_best)
    h = protrusion(body, s, alpha, half_thickness)
    if not math.isfinite(h):
        raise OptimizerError("optimum is not admissible", trace)
    center = h - body.extent(s) / 2 + half_thickness
    if check_offaxis:
        _check_offaxis(body, s, center, h, seed)
    return HaloHeight(alpha, h, s, center, trace)


def _check_offaxis(body: Body, s: float, center: float, h: float, seed: int, trials: int = 10):
    """Moving the body sideways never lifts its boundary above the test point on the axis."""
    if body.shape != "ball":
        return
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        d = rng.standard_normal(body.n - 1)
        d *= rng.uniform(0, s) / max(np.linalg.norm(d), 1e-300)
        lateral = float(np.linalg.norm(d))
        reach = center + math.sqrt(max(s * s - lateral * lateral, 0.0)) - 1.0
        if reach > h + 1e-6:
            raise OptimizerError(f"off-axis placement improves the height: {reach} > {h}")


def halo_heights(shape: str, n: int, alphas, **kw) -> list[HaloHeight]:
    return [slab_halo_height(shape, n, a, **kw) for a in alphas]
