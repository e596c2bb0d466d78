"""Minimal deterministic SVG emission.

Plots are plain text with pinned float formatting so repeated runs produce
byte-identical files; no plotting library is involved.
"""

from __future__ import annotations

GENERATOR = "detspace-svg/1"

_W, _H = 480, 360
_ML, _MR, _MT, _MB = 56, 16, 28, 44  # margins around the axes box


def _f(v: float) -> str:
    return f"{v:.2f}"


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str,
                 xlim: tuple[float, float], ylim: tuple[float, float]):
        self.parts: list[str] = []
        self.xlim, self.ylim = xlim, ylim
        self.parts.append(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">')
        self.parts.append(f"<!-- {GENERATOR} -->")
        self.parts.append(f'<rect width="{_W}" height="{_H}" fill="white"/>')
        self.parts.append(
            f'<text x="{_W / 2:.0f}" y="18" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{title}</text>')
        self.parts.append(
            f'<text x="{_W / 2:.0f}" y="{_H - 8}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{xlabel}</text>')
        self.parts.append(
            f'<text x="14" y="{_H / 2:.0f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11" '
            f'transform="rotate(-90 14 {_H / 2:.0f})">{ylabel}</text>')

    def x(self, v: float) -> float:
        lo, hi = self.xlim
        span = (hi - lo) or 1.0
        return _ML + (v - lo) / span * (_W - _ML - _MR)

    def y(self, v: float) -> float:
        lo, hi = self.ylim
        span = (hi - lo) or 1.0
        return _H - _MB - (v - lo) / span * (_H - _MT - _MB)

    def axes(self, xticks, yticks):
        x0, x1 = _ML, _W - _MR
        y0, y1 = _H - _MB, _MT
        self.parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
        self.parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
        for t in xticks:
            px = self.x(t)
            self.parts.append(f'<line x1="{_f(px)}" y1="{y0}" x2="{_f(px)}" y2="{y0 + 4}" stroke="black"/>')
            self.parts.append(f'<text x="{_f(px)}" y="{y0 + 16}" text-anchor="middle" '
                              f'font-family="sans-serif" font-size="10">{t:g}</text>')
        for t in yticks:
            py = self.y(t)
            self.parts.append(f'<line x1="{x0 - 4}" y1="{_f(py)}" x2="{x0}" y2="{_f(py)}" stroke="black"/>')
            self.parts.append(f'<text x="{x0 - 6}" y="{_f(py + 3)}" text-anchor="end" '
                              f'font-family="sans-serif" font-size="10">{t:g}</text>')

    def finish(self) -> str:
        self.parts.append("</svg>")
        return "\n".join(self.parts) + "\n"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [round(lo + i * step, 6) for i in range(n)]


def scatter_with_band(points: list[tuple[float, float]],
                      band: tuple[float, float] | None,
                      title: str, xlabel: str, ylabel: str = "score",
                      reference_band: tuple[float, float] | None = None,
                      xlim: tuple[float, float] = (0.0, 1.0)) -> str:
    """Ratio-vs-score scatter with the bootstrap range shaded."""
    ys = [p[1] for p in points] or [0.0, 1.0]
    ylo, yhi = min(ys), max(ys)
    pad = (yhi - ylo) * 0.08 or 0.05
    c = _Canvas(title, xlabel, ylabel, xlim, (ylo - pad, yhi + pad))
    if band is not None:
        bx0, bx1 = c.x(band[0]), c.x(band[1])
        c.parts.append(f'<rect x="{_f(bx0)}" y="{_MT}" width="{_f(max(bx1 - bx0, 1.0))}" '
                       f'height="{_H - _MT - _MB}" fill="#9ecae1" fill-opacity="0.45"/>')
    if reference_band is not None:
        rx0, rx1 = c.x(reference_band[0]), c.x(reference_band[1])
        c.parts.append(f'<rect x="{_f(rx0)}" y="{_MT}" width="{_f(max(rx1 - rx0, 1.0))}" '
                       f'height="{_H - _MT - _MB}" fill="none" stroke="#d95f02" '
                       f'stroke-dasharray="5,3"/>')
    c.axes(_ticks(*xlim), _ticks(ylo - pad, yhi + pad))
    for px, py in points:
        c.parts.append(f'<circle cx="{_f(c.x(px))}" cy="{_f(c.y(py))}" r="2.2" '
                       f'fill="#1f77b4" fill-opacity="0.6"/>')
    return c.finish()


def line_chart(xs: list[float], ys: list[float], title: str, xlabel: str,
               ylabel: str, marks: list[tuple[float, float, str]] | None = None) -> str:
    """Single polyline (CDF-style) with optional annotated points."""
    xlim = (min(xs), max(xs)) if xs else (0.0, 1.0)
    ylim = (0.0, max(max(ys, default=1.0), 1e-9))
    c = _Canvas(title, xlabel, ylabel, xlim, ylim)
    c.axes(_ticks(*xlim), _ticks(*ylim))
    pts = " ".join(f"{_f(c.x(x))},{_f(c.y(y))}" for x, y in zip(xs, ys))
    c.parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>')
    for mx, my, label in marks or []:
        c.parts.append(f'<circle cx="{_f(c.x(mx))}" cy="{_f(c.y(my))}" r="3" fill="#d62728"/>')
        c.parts.append(f'<text x="{_f(c.x(mx) + 5)}" y="{_f(c.y(my) - 5)}" '
                       f'font-family="sans-serif" font-size="10">{label}</text>')
    return c.finish()


def grouped_bars(categories: list[str], series: dict[str, list[float]],
                 title: str, xlabel: str, ylabel: str) -> str:
    """Side-by-side bars per category (match-statistics style)."""
    colors = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"]
    vmax = max((max(v) for v in series.values() if v), default=1.0) or 1.0
    c = _Canvas(title, xlabel, ylabel, (0.0, float(len(categories))), (0.0, vmax * 1.05))
    c.axes([], _ticks(0.0, vmax * 1.05))
    nseries = max(len(series), 1)
    slot = (_W - _ML - _MR) / max(len(categories), 1)
    bar_w = slot * 0.8 / nseries
    for si, (name, values) in enumerate(series.items()):
        color = colors[si % len(colors)]
        for ci, v in enumerate(values):
            x = _ML + ci * slot + slot * 0.1 + si * bar_w
            y = c.y(v)
            c.parts.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(bar_w)}" '
                           f'height="{_f(_H - _MB - y)}" fill="{color}"/>')
        ly = _MT + 12 + 12 * si
        c.parts.append(f'<rect x="{_W - _MR - 90}" y="{ly - 8}" width="9" height="9" fill="{color}"/>')
        c.parts.append(f'<text x="{_W - _MR - 78}" y="{ly}" font-family="sans-serif" '
                       f'font-size="10">{name}</text>')
    for ci, cat in enumerate(categories):
        x = _ML + (ci + 0.5) * slot
        c.parts.append(f'<text x="{_f(x)}" y="{_H - _MB + 16}" text-anchor="middle" '
                       f'font-family="sans-serif" font-size="10">{cat}</text>')
    return c.finish()


def stacked_bar(segments: list[tuple[str, float]], title: str) -> str:
    """One horizontal stacked bar of component shares (flops report style)."""
    colors = ["#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728"]
    total = sum(v for _, v in segments) or 1.0
    c = _Canvas(title, "share of multiply-adds", "", (0.0, 1.0), (0.0, 1.0))
    x = _ML
    width_px = _W - _ML - _MR
    y0, bar_h = _H / 2 - 30, 60
    for i, (name, v) in enumerate(segments):
        w = v / total * width_px
        color = colors[i % len(colors)]
        c.parts.append(f'<rect x="{_f(x)}" y="{_f(y0)}" width="{_f(w)}" '
                       f'height="{bar_h}" fill="{color}" stroke="white"/>')
        if w > 30:
            c.parts.append(f'<text x="{_f(x + w / 2)}" y="{_f(y0 + bar_h / 2 + 3)}" '
                           f'text-anchor="middle" font-family="sans-serif" font-size="10" '
                           f'fill="white">{name} {v / total * 100:.1f}%</text>')
        else:
            c.parts.append(f'<text x="{_f(x + w / 2)}" y="{_f(y0 - 6 - (i % 2) * 12)}" '
                           f'text-anchor="middle" font-family="sans-serif" '
                           f'font-size="9">{name}</text>')
        x += w
    return c.finish()
