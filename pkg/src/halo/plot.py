"""Deterministic SVG log-log plots of sweep records and exponent fits."""
from __future__ import annotations

import math
from typing import Sequence, Union
from xml.sax.saxutils import escape

from .lab.fit import ExponentFit
from .lab.sampler import SweepRecord

WIDTH, HEIGHT = 800, 600
MARGIN = 70


def _num(x: float) -> str:
    return f"{x:.3f}"


def _points(items) -> tuple[list[tuple[float, float]], ExponentFit | None, str]:
    pts, fit, label = [], None, ""
    for it in items:
        if isinstance(it, ExponentFit):
            fit = it
            pts.extend(it.points)
        elif isinstance(it, SweepRecord):
            pts.append((it.alpha, it.lower_ratio))
            label = label or f"{it.family} on {it.set_label}"
        else:
            pts.append((float(it[0]), float(it[1])))
    return pts, fit, label


def emit_plot(records: Sequence[Union[SweepRecord, ExponentFit, tuple]], *, title: str = "",
              ylabel: str = "value - 1") -> str:
    """log(value - 1) against log(1/α - 1), with the fitted line when a fit is given."""
    if not records:
        raise ValueError("nothing to plot")
    pts, fit, label = _points(records)
    xy = [(math.log(1 / a - 1), math.log(v - 1)) for a, v in pts if 0 < a < 1 and v > 1]
    title = title or label or "log-log plot"
    if xy:
        xs, ys = [p[0] for p in xy], [p[1] for p in xy]
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    else:
        x0 = x1 = y0 = y1 = 0.0
    # pad degenerate ranges so a single point lands in the middle
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 1, x1 + 1
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 1, y1 + 1

    def px(x):
        return MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def py(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH // 2}" y="30" text-anchor="middle" font-size="18">{escape(title)}</text>',
           f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
           f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
           f'<text x="{WIDTH // 2}" y="{HEIGHT - 20}" text-anchor="middle" font-size="14">log(1/alpha - 1)</text>',
           f'<text x="20" y="{HEIGHT // 2}" text-anchor="middle" font-size="14" '
           f'transform="rotate(-90 20 {HEIGHT // 2})">log({escape(ylabel)})</text>']
    for k in range(5):
        tx = x0 + (x1 - x0) * k / 4
        ty = y0 + (y1 - y0) * k / 4
        out.append(f'<text x="{_num(px(tx))}" y="{HEIGHT - MARGIN + 18}" text-anchor="middle" '
                   f'font-size="11">{tx:.2f}</text>')
        out.append(f'<text x="{MARGIN - 8}" y="{_num(py(ty) + 4)}" text-anchor="end" font-size="11">{ty:.2f}</text>')
    for x, y in xy:
        out.append(f'<circle cx="{_num(px(x))}" cy="{_num(py(y))}" r="4" fill="steelblue"/>')
    if fit is not None:
        fy = lambda x: fit.slope * x + fit.intercept
        out.append(f'<line x1="{_num(px(x0))}" y1="{_num(py(fy(x0)))}" x2="{_num(px(x1))}" '
                   f'y2="{_num(py(fy(x1)))}" stroke="firebrick" stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - MARGIN}" y="{MARGIN - 10}" text-anchor="end" font-size="14" '
                   f'fill="firebrick">slope = {fit.slope:.4f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
