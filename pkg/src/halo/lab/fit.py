"""Log-log exponent fits for halo asymptotics."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MIN_POINTS = 5


@dataclass
class ExponentFit:
    points: list[tuple[float, float]]
    slope: float
    intercept: float
    residual: float                 # largest absolute residual in log coordinates
    window: tuple[float, float]     # α range actually used

    def predict(self, alpha: float) -> float:
        """1 + exp(intercept) (1/α - 1)^slope."""
        return 1 + math.exp(self.intercept) * (1 / alpha - 1) ** self.slope

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "residual": self.residual,
                "window": list(self.window), "points": [list(p) for p in self.points]}


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return float(slope), float(intercept), residual


def fit_exponent(points: Sequence[tuple[float, float]]) -> ExponentFit:
    """Least squares of log(value - 1) against log(1/α - 1).

    Points with value <= 1 are dropped with a warning.
    """
    kept = []
    for alpha, value in points:
        if not 0 < alpha < 1:
            raise ValueError(f"level {alpha} outside (0, 1)")
        if value <= 1:
            warnings.warn(f"dropping point alpha={alpha} with value {value} <= 1", RuntimeWarning)
            continue
        kept.append((float(alpha), float(value)))
    if len(kept) < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points with value > 1, got {len(kept)}")
    x = np.log([1 / a - 1 for a, _ in kept])
    y = np.log([v - 1 for _, v in kept])
    alphas = [a for a, _ in kept]
    return ExponentFit(kept, *_ols(x, y), (min(alphas), max(alphas)))


def fit_from_eps(eps: Sequence[float], excess: Sequence[float]) -> ExponentFit:
    """The same fit given ε = 1 - α and value - 1 directly, avoiding cancellation near α = 1.

    `points` then holds (ε, value - 1) pairs and `window` the ε range.
    """
    pairs = [(float(e), float(v)) for e, v in zip(eps, excess) if v > 0 and 0 < e < 1]
    if len(pairs) < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points with value > 1, got {len(pairs)}")
    x = np.log([e / (1 - e) for e, _ in pairs])
    y = np.log([v for _, v in pairs])
    es = [e for e, _ in pairs]
    return ExponentFit(pairs, *_ols(x, y), (min(es), max(es)))
