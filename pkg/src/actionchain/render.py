"""SVG figures: the per-driver behaviour map and the flow DH histogram.

Markup is generated directly. Every drawn band and bar carries ``data-*``
attributes so tests can check structure without comparing bytes.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .config import VARIABLES
from .errors import EmptyTimeline, TooFewScores
from .hetero import DriverScore, FlowStats
from .segment import Trend, TrendTimeline

VARIABLE_HUES = {"v": 210, "a": 25, "d": 130, "dv": 280}
VARIABLE_NAMES = {"v": "Velocity", "a": "Acceleration", "d": "Distance", "dv": "Speed difference"}
# darker = more active
TREND_LIGHTNESS = {Trend.I: 30, Trend.H: 48, Trend.L: 68, Trend.D: 86}
TREND_NAMES = {Trend.I: "Increasing", Trend.H: "Stable high", Trend.L: "Stable low", Trend.D: "Decreasing"}


def trend_color(variable: str, trend: Trend) -> str:
    return f"hsl({VARIABLE_HUES[variable]},70%,{TREND_LIGHTNESS[Trend(trend)]}%)"


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _ticks(upper: float, target: int = 8) -> list[float]:
    if upper <= 0:
        return [0.0]
    raw = upper / target
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    return [i * step for i in range(int(upper / step + 1e-9) + 1)]


def _svg(width: float, height: float, body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" height="{_fmt(height)}" '
            f'viewBox="0 0 {_fmt(width)} {_fmt(height)}" font-family="sans-serif" font-size="12">')
    return "\n".join([head, *body, "</svg>"]) + "\n"


def map_svg(timelines: Mapping[str, TrendTimeline] | Sequence[TrendTimeline], dt: float = 0.1,
            title: str | None = None, width: float = 900.0) -> str:
    if not isinstance(timelines, Mapping):
        timelines = {tl.variable: tl for tl in timelines}
    rows = [var for var in VARIABLES if var in timelines]
    if not rows or any(not timelines[var].segments for var in rows):
        raise EmptyTimeline("nothing to draw")
    length = max(timelines[var].length for var in rows)
    left, right, top, band, gap = 130.0, 20.0, 40.0, 28.0, 10.0
    plot_w = width - left - right
    scale = plot_w / (length * dt)
    axis_y = top + len(rows) * (band + gap)
    legend_y = axis_y + 45
    height = legend_y + 22 * len(rows) + 10

    body = []
    if title:
        body.append(f'<text x="{_fmt(left)}" y="22" font-size="14">{escape(title)}</text>')
    for r, var in enumerate(rows):
        y = top + r * (band + gap)
        body.append(f'<text x="{_fmt(left - 8)}" y="{_fmt(y + band / 2 + 4)}" text-anchor="end">'
                    f'{VARIABLE_NAMES[var]}</text>')
        for s in timelines[var].segments:
            x0 = left + s.start * dt * scale
            x1 = left + s.end * dt * scale
            body.append(
                f'<rect class="band" data-variable="{var}" data-trend="{s.trend.value}" '
                f'data-start="{s.start}" data-end="{s.end}" x="{_fmt(x0)}" y="{_fmt(y)}" '
                f'width="{_fmt(x1 - x0)}" height="{_fmt(band)}" fill="{trend_color(var, s.trend)}"/>')
    body.append(f'<line class="axis" x1="{_fmt(left)}" y1="{_fmt(axis_y)}" '
                f'x2="{_fmt(left + plot_w)}" y2="{_fmt(axis_y)}" stroke="black"/>')
    for t in _ticks(length * dt):
        x = left + t * scale
        body.append(f'<line x1="{_fmt(x)}" y1="{_fmt(axis_y)}" x2="{_fmt(x)}" y2="{_fmt(axis_y + 4)}" stroke="black"/>')
        body.append(f'<text x="{_fmt(x)}" y="{_fmt(axis_y + 17)}" text-anchor="middle">{_fmt(t)}</text>')
    body.append(f'<text x="{_fmt(left + plot_w / 2)}" y="{_fmt(axis_y + 33)}" text-anchor="middle">Time (s)</text>')

    body.append('<g class="legend">')
    for r, var in enumerate(rows):
        y = legend_y + r * 22
        body.append(f'<text x="{_fmt(left - 8)}" y="{_fmt(y + 11)}" text-anchor="end">{VARIABLE_NAMES[var]}</text>')
        for j, trend in enumerate(TREND_LIGHTNESS):
            x = left + j * 150
            body.append(f'<rect class="swatch" data-variable="{var}" data-trend="{trend.value}" x="{_fmt(x)}" '
                        f'y="{_fmt(y)}" width="14" height="14" fill="{trend_color(var, trend)}"/>')
            body.append(f'<text x="{_fmt(x + 20)}" y="{_fmt(y + 11)}">{trend.value}: {TREND_NAMES[trend]}</text>')
    body.append("</g>")
    return _svg(width, height, body)


def render_map(timelines, out_path: str | Path, dt: float = 0.1, title: str | None = None) -> Path:
    """Write the behaviour map of one driver: one band row per variable, time in seconds."""
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(map_svg(timelines, dt, title), encoding="utf-8")
    return out


def histogram_svg(scores: Sequence[DriverScore], stats: FlowStats, bins: int = 20,
                  width: float = 640.0, height: float = 420.0) -> str:
    if len(scores) < 2:
        raise TooFewScores(f"need at least 2 scores, got {len(scores)}")
    dh = np.array([s.dh for s in scores], dtype=float)
    lo, hi = float(dh.min()), float(dh.max())
    hi = max(hi, stats.threshold)
    if hi - lo <= 0:
        span = max(abs(lo), 1e-3) * 0.1
        edges = np.array([lo - span, lo + span])
    else:
        edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(dh, bins=edges)
    x_lo, x_hi = float(edges[0]), float(edges[-1])
    pad = 0.05 * (x_hi - x_lo)
    x_lo, x_hi = x_lo - pad, x_hi + pad
    left, right, top, bottom = 60.0, 20.0, 30.0, 50.0
    pw, ph = width - left - right, height - top - bottom
    y_max = max(float(counts.max()), 1.0) * 1.1

    def sx(x):
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    def sy(y):
        return top + ph - y / y_max * ph

    body = []
    for c, a, b in zip(counts, edges[:-1], edges[1:]):
        body.append(f'<rect class="bar" data-count="{int(c)}" data-lo="{float(a)!r}" data-hi="{float(b)!r}" '
                    f'x="{_fmt(sx(a))}" y="{_fmt(sy(c))}" width="{_fmt(sx(b) - sx(a))}" '
                    f'height="{_fmt(sy(0) - sy(c))}" fill="#8fb3d9" stroke="white"/>')
    if stats.sigma > 0:
        xs = np.linspace(x_lo, x_hi, 200)
        bw = float(edges[1] - edges[0])
        pdf = np.exp(-0.5 * ((xs - stats.mu) / stats.sigma) ** 2) / (stats.sigma * math.sqrt(2 * math.pi))
        ys = len(dh) * bw * pdf
        pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(min(y, y_max)))}" for x, y in zip(xs, ys))
        body.append(f'<polyline class="normal-fit" fill="none" stroke="#c0392b" stroke-width="1.5" points="{pts}"/>')
    tx = sx(stats.threshold)
    body.append(f'<line class="threshold" data-value="{stats.threshold!r}" x1="{_fmt(tx)}" y1="{_fmt(top)}" '
                f'x2="{_fmt(tx)}" y2="{_fmt(top + ph)}" stroke="black" stroke-dasharray="5,3"/>')
    body.append(f'<text x="{_fmt(tx + 4)}" y="{_fmt(top + 12)}">μ+3σ</text>')
    flagged = set(stats.outliers)
    for s in scores:
        if s.driver_id in flagged:
            body.append(f'<circle class="outlier" data-driver="{s.driver_id}" cx="{_fmt(sx(s.dh))}" '
                        f'cy="{_fmt(sy(0) - 6)}" r="4" fill="#c0392b"/>')
    body.append(f'<line class="axis" x1="{_fmt(left)}" y1="{_fmt(sy(0))}" x2="{_fmt(left + pw)}" '
                f'y2="{_fmt(sy(0))}" stroke="black"/>')
    body.append(f'<line class="axis" x1="{_fmt(left)}" y1="{_fmt(top)}" x2="{_fmt(left)}" '
                f'y2="{_fmt(sy(0))}" stroke="black"/>')
    for t in np.linspace(x_lo, x_hi, 6):
        body.append(f'<text x="{_fmt(sx(t))}" y="{_fmt(sy(0) + 16)}" text-anchor="middle">{t:.3f}</text>')
    body.append(f'<text x="{_fmt(left + pw / 2)}" y="{_fmt(height - 10)}" text-anchor="middle">DH</text>')
    body.append(f'<text x="15" y="{_fmt(top + ph / 2)}" text-anchor="middle" '
                f'transform="rotate(-90 15 {_fmt(top + ph / 2)})">Number of drivers</text>')
    body.append(f'<text x="{_fmt(left)}" y="18">μ = {stats.mu:.4f}, σ = {stats.sigma:.4f}</text>')
    return _svg(width, height, body)


def render_histogram(scores: Sequence[DriverScore], stats: FlowStats, out_path: str | Path,
                     bins: int = 20) -> Path:
    """Write the DH histogram with a fitted normal curve and the mean + 3 sd marker."""
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(histogram_svg(scores, stats, bins), encoding="utf-8")
    return out
