"""Deterministic SVG scatter plots and log-space reference fits.

The renderer is a pure function of the spec: fixed layout, fixed float
formatting, no timestamps, so the same spec always yields the same
bytes.  Data points are <circle> elements and the reference line is the
only <line> element; axes, grids, and error bars are <path> elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError


@dataclass
class ReferenceFit:
    slope: float
    intercept: float   # log10-space intercept of the free fit
    unit_coeff: float  # c in y = c * x from the slope-1 constrained fit


def fit_reference(xs, ys) -> ReferenceFit:
    """Least-squares line through (log10 x, log10 y), plus a unit-slope fit.

    The unit-slope fit minimizes the same residuals with slope pinned to
    1; its coefficient c satisfies log10 c = mean(log10 y - log10 x).
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) != len(ys):
        raise FitError(f"x and y lengths differ: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise FitError("need at least 2 points to fit")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise FitError("log-log fit needs strictly positive values")
    lx = np.log10(xs)
    ly = np.log10(ys)
    if float(np.ptp(lx)) == 0.0:
        raise FitError("x values are all equal; slope is undetermined")
    slope, intercept = np.polyfit(lx, ly, 1)
    return ReferenceFit(
        slope=float(slope),
        intercept=float(intercept),
        unit_coeff=float(10.0 ** np.mean(ly - lx)),
    )


@dataclass
class PlotSpec:
    xs: list
    ys: list
    labels: list | None = None
    ref_slope: float | None = None
    ref_intercept: float | None = None  # log10 space
    x_label: str = ""
    y_label: str = ""
    title: str = ""
    equal_aspect: bool = True
    x_log: bool = True
    y_log: bool = True
    y_err: list | None = None  # (lo, hi) absolute bounds per point


def _validate(spec: PlotSpec) -> None:
    n = len(spec.xs)
    if n == 0:
        raise ValueError("nothing to plot")
    if len(spec.ys) != n:
        raise ValueError(f"x and y lengths differ: {n} vs {len(spec.ys)}")
    if spec.labels is not None and len(spec.labels) != n:
        raise ValueError("labels length does not match points")
    if spec.y_err is not None and len(spec.y_err) != n:
        raise ValueError("y_err length does not match points")
    if spec.x_log and any(x <= 0 for x in spec.xs):
        raise ValueError("log-scale x needs strictly positive values")
    y_all = list(spec.ys)
    if spec.y_err is not None:
        for lo, hi in spec.y_err:
            y_all.extend((lo, hi))
    if spec.y_log and any(y <= 0 for y in y_all):
        raise ValueError("log-scale y needs strictly positive values")


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


MARGIN_L = 70.0
MARGIN_R = 24.0
MARGIN_T = 34.0
MARGIN_B = 52.0
PX_PER_DECADE = 85.0
PANEL = 360.0


def _log_bounds(values) -> tuple:
    lo = math.floor(math.log10(min(values)))
    hi = math.ceil(math.log10(max(values)))
    if hi <= lo:
        hi = lo + 1
    return float(lo), float(hi)


def _lin_bounds(values) -> tuple:
    lo, hi = min(values), max(values)
    if hi <= lo:
        return lo - 0.5, lo + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _tick_label(value: float, log_scale: bool) -> str:
    if log_scale:
        exp = int(round(value))
        return f"1e{exp}"
    if value == int(value):
        return str(int(value))
    return f"{value:.6g}"


def render_loglog(spec: PlotSpec, path: str | None = None) -> str:
    """Render the spec to SVG text; optionally write it to path."""
    _validate(spec)

    xs = [math.log10(x) if spec.x_log else float(x) for x in spec.xs]
    ys = [math.log10(y) if spec.y_log else float(y) for y in spec.ys]
    err = None
    if spec.y_err is not None:
        err = [
            (math.log10(lo) if spec.y_log else float(lo),
             math.log10(hi) if spec.y_log else float(hi))
            for lo, hi in spec.y_err
        ]

    x0, x1 = _log_bounds(spec.xs) if spec.x_log else _lin_bounds(spec.xs)
    y_span = list(ys) + ([v for pair in err for v in pair] if err else [])
    if spec.y_log:
        y0, y1 = _log_bounds([10.0 ** v for v in y_span])
    else:
        y0, y1 = _lin_bounds(y_span)

    if spec.equal_aspect and spec.x_log and spec.y_log:
        plot_w = (x1 - x0) * PX_PER_DECADE
        plot_h = (y1 - y0) * PX_PER_DECADE
    else:
        plot_w = PANEL * 4 / 3
        plot_h = PANEL

    width = MARGIN_L + plot_w + MARGIN_R
    height = MARGIN_T + plot_h + MARGIN_B

    def px(u: float) -> float:
        return MARGIN_L + (u - x0) / (x1 - x0) * plot_w

    def py(v: float) -> float:
        return MARGIN_T + (y1 - v) / (y1 - y0) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>',
    ]
    if spec.title:
        parts.append(
            f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" fill="#222">{_esc(spec.title)}</text>'
        )

    # grid and ticks
    grid = []
    tick_texts = []
    if spec.x_log:
        x_ticks = [float(t) for t in range(int(x0), int(x1) + 1)]
    else:
        x_ticks = list(np.linspace(x0, x1, 6))
    for t in x_ticks:
        gx = px(t)
        grid.append(f"M{gx:.2f} {MARGIN_T:.2f}V{MARGIN_T + plot_h:.2f}")
        tick_texts.append(
            f'<text x="{gx:.2f}" y="{MARGIN_T + plot_h + 16:.2f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10" fill="#444">{_tick_label(t, spec.x_log)}</text>'
        )
    if spec.y_log:
        y_ticks = [float(t) for t in range(int(y0), int(y1) + 1)]
    else:
        y_ticks = list(np.linspace(y0, y1, 6))
    for t in y_ticks:
        gy = py(t)
        grid.append(f"M{MARGIN_L:.2f} {gy:.2f}H{MARGIN_L + plot_w:.2f}")
        tick_texts.append(
            f'<text x="{MARGIN_L - 6:.2f}" y="{gy + 3:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10" fill="#444">{_tick_label(t, spec.y_log)}</text>'
        )
    parts.append(f'<path d="{" ".join(grid)}" stroke="#ddd" fill="none" stroke-width="1"/>')
    parts.extend(tick_texts)
    parts.append(
        f'<path d="M{MARGIN_L:.2f} {MARGIN_T:.2f}V{MARGIN_T + plot_h:.2f}'
        f'H{MARGIN_L + plot_w:.2f}" stroke="#222" fill="none" stroke-width="1.2"/>'
    )

    # error bars under the points
    if err is not None:
        for cx, (lo, hi) in zip(xs, err):
            parts.append(
                f'<path d="M{px(cx):.2f} {py(lo):.2f}V{py(hi):.2f}" '
                f'stroke="#7aa6d6" stroke-width="1.4" fill="none"/>'
            )

    # reference line, clipped to the panel in axis units
    if spec.ref_slope is not None and spec.ref_intercept is not None:
        pts = []
        for u, v in (
            (x0, spec.ref_slope * x0 + spec.ref_intercept),
            (x1, spec.ref_slope * x1 + spec.ref_intercept),
        ):
            pts.append((u, v))
        (ua, va), (ub, vb) = pts
        # clip against [y0, y1]
        def clip(ua, va, ub, vb):
            if va == vb:
                return (ua, va, ub, vb) if y0 <= va <= y1 else None
            lo, hi = sorted((va, vb))
            if hi < y0 or lo > y1:
                return None
            def at(v):
                t = (v - va) / (vb - va)
                return ua + t * (ub - ua)
            if va < y0:
                ua, va = at(y0), y0
            elif va > y1:
                ua, va = at(y1), y1
            if vb < y0:
                ub, vb = at(y0), y0
            elif vb > y1:
                ub, vb = at(y1), y1
            return ua, va, ub, vb
        clipped = clip(ua, va, ub, vb)
        if clipped is not None:
            ua, va, ub, vb = clipped
            parts.append(
                f'<line x1="{px(ua):.2f}" y1="{py(va):.2f}" x2="{px(ub):.2f}" '
                f'y2="{py(vb):.2f}" stroke="#c0392b" stroke-width="1.5" '
                f'stroke-dasharray="6 3"/>'
            )

    for i, (u, v) in enumerate(zip(xs, ys)):
        label = ""
        if spec.labels is not None:
            label = f"<title>{_esc(spec.labels[i])}</title>"
        parts.append(
            f'<circle cx="{px(u):.2f}" cy="{py(v):.2f}" r="3.2" fill="#2e5e9e" '
            f'fill-opacity="0.85">{label}</circle>'
            if label
            else f'<circle cx="{px(u):.2f}" cy="{py(v):.2f}" r="3.2" '
                 f'fill="#2e5e9e" fill-opacity="0.85"/>'
        )

    if spec.x_label:
        parts.append(
            f'<text x="{MARGIN_L + plot_w / 2:.2f}" y="{height - 14:.2f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" fill="#222">{_esc(spec.x_label)}</text>'
        )
    if spec.y_label:
        cy = MARGIN_T + plot_h / 2
        parts.append(
            f'<text x="18" y="{cy:.2f}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="12" fill="#222" transform="rotate(-90 18 {cy:.2f})">{_esc(spec.y_label)}</text>'
        )
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(svg)
    return svg
