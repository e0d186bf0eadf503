"""Static SVG figures: scatter plots, density overlays and boxplots.

Output is plain text built from fixed-precision coordinates, so identical
inputs always give identical bytes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

MIN_CURVE_POINTS = 200
WIDTH, HEIGHT = 480, 360
MARGIN = dict(left=60, right=20, top=36, bottom=48)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#7f7f7f")


class PlotKind(enum.Enum):
    SCATTER = "scatter"
    DENSITY_OVERLAY = "density"
    BOXPLOT = "boxplot"


@dataclass(frozen=True)
class PlotSpec:
    """What to draw.

    ``series`` maps a label to an (k, 2) array of points for scatter and
    density plots, or to a 1-d array of values for boxplots.
    """

    kind: PlotKind
    series: dict
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    styles: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = PlotKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not self.series:
            raise ValueError("a plot needs at least one series")
        clean = {}
        for name, values in self.series.items():
            arr = np.asarray(values, dtype=float)
            if arr.size == 0:
                raise ValueError(f"series {name!r} is empty")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"series {name!r} has non-finite coordinates")
            if kind is PlotKind.BOXPLOT:
                arr = arr.ravel()
            elif arr.ndim != 2 or arr.shape[1] != 2:
                raise ValueError(f"series {name!r} must be an array of (x, y) points")
            if kind is PlotKind.DENSITY_OVERLAY and arr.shape[0] < MIN_CURVE_POINTS:
                raise ValueError(f"density curves need at least {MIN_CURVE_POINTS} points")
            clean[str(name)] = arr
        object.__setattr__(self, "series", clean)


def density_curve(density, lo=None, hi=None, points=400):
    """Sample ``density.pdf`` on an even grid as an (points, 2) array."""
    if lo is None or hi is None:
        support = density.support
        s_lo, s_hi = support() if callable(support) else support
        pad = 0.05 * (s_hi - s_lo)
        lo = s_lo - pad if lo is None else lo
        hi = s_hi + pad if hi is None else hi
    xs = np.linspace(lo, hi, max(points, MIN_CURVE_POINTS))
    return np.column_stack([xs, density.pdf(xs)])


def box_stats(values):
    """Quartiles and Tukey whiskers (1.5 IQR) of ``values``."""
    v = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "whislo": float(inside.min()),
        "whishi": float(inside.max()),
        "outliers": v[(v < lo_fence) | (v > hi_fence)].tolist(),
    }


def _num(v):
    return f"{v:.2f}"


def _ticks(lo, hi, count=5):
    return np.linspace(lo, hi, count)


class _Canvas:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.parts = []

    def px(self, x):
        span = self.x1 - self.x0
        return MARGIN["left"] + (x - self.x0) / span * (WIDTH - MARGIN["left"] - MARGIN["right"])

    def py(self, y):
        span = self.y1 - self.y0
        return HEIGHT - MARGIN["bottom"] - (y - self.y0) / span * (HEIGHT - MARGIN["top"] - MARGIN["bottom"])

    def add(self, text):
        self.parts.append(text)


def _limits(lo, hi):
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _axes(c, spec, xticks=True, xticklabels=None):
    left, bottom = MARGIN["left"], HEIGHT - MARGIN["bottom"]
    right, top = WIDTH - MARGIN["right"], MARGIN["top"]
    c.add(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" fill="none" stroke="#000"/>')
    for y in _ticks(c.y0, c.y1):
        c.add(f'<text x="{left - 6}" y="{_num(c.py(y) + 4)}" text-anchor="end" font-size="10">{y:.3g}</text>')
    if xticklabels is not None:
        for x, label in xticklabels:
            c.add(f'<text x="{_num(c.px(x))}" y="{bottom + 16}" text-anchor="middle" font-size="10">{escape(label)}</text>')
    elif xticks:
        for x in _ticks(c.x0, c.x1):
            c.add(f'<text x="{_num(c.px(x))}" y="{bottom + 16}" text-anchor="middle" font-size="10">{x:.3g}</text>')
    if spec.title:
        c.add(f'<text x="{WIDTH / 2:.2f}" y="20" text-anchor="middle" font-size="13">{escape(spec.title)}</text>')
    if spec.xlabel:
        c.add(f'<text x="{WIDTH / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle" font-size="11">{escape(spec.xlabel)}</text>')
    if spec.ylabel:
        c.add(
            f'<text x="14" y="{HEIGHT / 2:.2f}" text-anchor="middle" font-size="11" '
            f'transform="rotate(-90 14 {HEIGHT / 2:.2f})">{escape(spec.ylabel)}</text>'
        )


def _legend(c, names):
    for i, name in enumerate(names):
        y = MARGIN["top"] + 12 + 14 * i
        x = WIDTH - MARGIN["right"] - 110
        color = PALETTE[i % len(PALETTE)]
        c.add(f'<line x1="{x}" y1="{y - 4}" x2="{x + 16}" y2="{y - 4}" stroke="{color}" stroke-width="2"/>')
        c.add(f'<text x="{x + 20}" y="{y}" font-size="10">{escape(name)}</text>')


def _xy_plot(spec):
    pts = np.vstack(list(spec.series.values()))
    c = _Canvas(_limits(pts[:, 0].min(), pts[:, 0].max()), _limits(pts[:, 1].min(), pts[:, 1].max()))
    _axes(c, spec)
    for i, (name, arr) in enumerate(spec.series.items()):
        color = spec.styles.get(name, PALETTE[i % len(PALETTE)])
        if spec.kind is PlotKind.SCATTER:
            c.add(f'<g class="series" data-name="{escape(name)}" fill="{color}">')
            for x, y in arr:
                c.add(f'<circle cx="{_num(c.px(x))}" cy="{_num(c.py(y))}" r="1.8"/>')
            c.add("</g>")
        else:
            path = " ".join(f"{_num(c.px(x))},{_num(c.py(y))}" for x, y in arr)
            c.add(
                f'<polyline class="series" data-name="{escape(name)}" data-points="{arr.shape[0]}" '
                f'fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>'
            )
    if len(spec.series) > 1:
        _legend(c, list(spec.series))
    return c


def _box_plot(spec):
    stats = {name: box_stats(v) for name, v in spec.series.items()}
    allv = np.concatenate(list(spec.series.values()))
    k = len(spec.series)
    c = _Canvas((0.5, k + 0.5), _limits(allv.min(), allv.max()))
    _axes(c, spec, xticklabels=[(i + 1, name) for i, name in enumerate(spec.series)])
    half = 0.3 * (c.px(1) - c.px(0))
    for i, (name, s) in enumerate(stats.items()):
        cx = c.px(i + 1)
        color = spec.styles.get(name, PALETTE[i % len(PALETTE)])
        attrs = " ".join(f'data-{key}="{s[key]:.17g}"' for key in ("q1", "median", "q3", "whislo", "whishi"))
        c.add(f'<g class="box" data-name="{escape(name)}" {attrs}>')
        top, bot = c.py(s["q3"]), c.py(s["q1"])
        c.add(
            f'<rect x="{_num(cx - half)}" y="{_num(top)}" width="{_num(2 * half)}" '
            f'height="{_num(bot - top)}" fill="{color}" fill-opacity="0.25" stroke="{color}"/>'
        )
        my = _num(c.py(s["median"]))
        c.add(f'<line x1="{_num(cx - half)}" y1="{my}" x2="{_num(cx + half)}" y2="{my}" stroke="#000" stroke-width="2"/>')
        for end, edge in (("whislo", bot), ("whishi", top)):
            wy = _num(c.py(s[end]))
            c.add(f'<line x1="{_num(cx)}" y1="{_num(edge)}" x2="{_num(cx)}" y2="{wy}" stroke="{color}"/>')
            c.add(f'<line x1="{_num(cx - half / 2)}" y1="{wy}" x2="{_num(cx + half / 2)}" y2="{wy}" stroke="{color}"/>')
        for v in s["outliers"]:
            c.add(f'<circle cx="{_num(cx)}" cy="{_num(c.py(v))}" r="2" fill="none" stroke="{color}"/>')
        c.add("</g>")
    return c


def render_svg(spec):
    c = _box_plot(spec) if spec.kind is PlotKind.BOXPLOT else _xy_plot(spec)
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">'
    )
    body = "\n".join([head, f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#fff"/>', *c.parts, "</svg>"])
    return body + "\n"


def emit_plot(spec, path):
    """Write ``spec`` as an SVG file."""
    Path(path).write_text(render_svg(spec))
