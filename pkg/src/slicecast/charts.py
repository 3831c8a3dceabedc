"""Self-contained SVG charts: actual-vs-predicted lines and a (w, u) scatter."""

from __future__ import annotations

import math
import os
from typing import Sequence
from xml.sax.saxutils import escape

APP_COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"]
VIEW_COLORS = {"mno": "#1f77b4", "vertical": "#e6a700", "joint": "#2ca02c", "hw": "#9467bd", "naive": "#8c564b"}
VIEW_MARKERS = {"mno": "circle", "vertical": "square", "joint": "triangle"}

WIDTH, HEIGHT = 900, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 170, 50, 60


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    mag = abs(v)
    for unit, scale in (("T", 1e12), ("G", 1e9), ("M", 1e6), ("k", 1e3)):
        if mag >= scale:
            return f"{v / scale:.3g}{unit}"
    return f"{v:.3g}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    step = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * step:
            step *= mult
            break
    start = math.floor(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        if v >= lo - 1e-9 * step:
            ticks.append(round(v, 12))
        v += step
    return ticks


class _Canvas:
    def __init__(self, title: str, x_label: str, y_label: str, x_range, y_range):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="Helvetica, Arial, sans-serif">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
            f'<text x="{(LEFT + WIDTH - RIGHT) / 2:.1f}" y="28" text-anchor="middle" '
            f'font-size="16">{escape(title)}</text>',
        ]
        self._axes(x_label, y_label)

    def px(self, x: float) -> float:
        return LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)

    def py(self, y: float) -> float:
        return HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)

    def _axes(self, x_label: str, y_label: str) -> None:
        p = self.parts
        right, bottom = WIDTH - RIGHT, HEIGHT - BOTTOM
        for t in _nice_ticks(self.y0, self.y1):
            y = self.py(t)
            p.append(f'<line x1="{LEFT}" y1="{y:.1f}" x2="{right}" y2="{y:.1f}" stroke="#e0e0e0"/>')
            p.append(f'<text x="{LEFT - 6}" y="{y + 4:.1f}" text-anchor="end" font-size="11">{_fmt(t)}</text>')
        for t in _nice_ticks(self.x0, self.x1, 8):
            x = self.px(t)
            p.append(f'<line x1="{x:.1f}" y1="{bottom}" x2="{x:.1f}" y2="{bottom + 5}" stroke="#000"/>')
            p.append(f'<text x="{x:.1f}" y="{bottom + 18}" text-anchor="middle" font-size="11">{_fmt(t)}</text>')
        p.append(f'<line x1="{LEFT}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#000"/>')
        p.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{bottom}" stroke="#000"/>')
        p.append(f'<text x="{(LEFT + right) / 2:.1f}" y="{HEIGHT - 18}" text-anchor="middle" '
                 f'font-size="13">{escape(x_label)}</text>')
        cy = (TOP + bottom) / 2
        p.append(f'<text x="20" y="{cy:.1f}" text-anchor="middle" font-size="13" '
                 f'transform="rotate(-90 20 {cy:.1f})">{escape(y_label)}</text>')

    def legend(self, row: int, label: str, swatch) -> None:
        """``swatch(x, y)`` returns the SVG for the legend symbol centred at (x + 10, y)."""
        x, y = WIDTH - RIGHT + 16, TOP + 10 + 22 * row
        self.parts.append(swatch(x, y))
        self.parts.append(f'<text x="{x + 26}" y="{y + 4}" font-size="12">{escape(label)}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _marker(shape: str, x: float, y: float, color: str, r: float = 5.0) -> str:
    if shape == "square":
        return f'<rect x="{x - r:.1f}" y="{y - r:.1f}" width="{2 * r:.1f}" height="{2 * r:.1f}" fill="{color}"/>'
    if shape == "triangle":
        pts = f"{x:.1f},{y - r:.1f} {x - r:.1f},{y + r:.1f} {x + r:.1f},{y + r:.1f}"
        return f'<polygon points="{pts}" fill="{color}"/>'
    return f'<circle cx="{x:.1f}" cy="{y:.1f}" r="{r:.1f}" fill="{color}"/>'


def line_chart_svg(title: str, periods: Sequence[int], actual: Sequence[float],
                   predicted: Sequence[tuple[str, Sequence[float], str]]) -> str:
    """Actual traffic in black plus one colored line per ``(label, values, color)``."""
    series = [("actual", list(actual), "#000000")] + [(l, list(v), c) for l, v, c in predicted]
    ys = [v for _, vals, _ in series for v in vals]
    periods = list(periods)
    canvas = _Canvas(title, "period (hour)", "traffic (bytes/hour)",
                     (min(periods), max(periods)), (0.0, max(ys) * 1.05 if ys else 1.0))
    for row, (label, vals, color) in enumerate(series):
        pts = " ".join(f"{canvas.px(x):.1f},{canvas.py(y):.1f}" for x, y in zip(periods, vals))
        canvas.parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        canvas.legend(row, label, lambda x, y, c=color:
                      f'<line x1="{x}" y1="{y}" x2="{x + 20}" y2="{y}" stroke="{c}" stroke-width="2"/>')
    return canvas.render()


def scatter_svg(title: str, points: Sequence[dict]) -> str:
    """(w, u) points; color encodes the app, marker shape the view."""
    ws = [float(p["w"]) for p in points] or [0.0]
    us = [float(p["u"]) for p in points] or [0.0]
    canvas = _Canvas(title, "unused capability w (bytes)", "scale-up events u",
                     (0.0, max(ws) * 1.1 or 1.0), (0.0, max(us) * 1.1 or 1.0))
    apps = sorted({p["app"] for p in points})
    colors = {a: APP_COLORS[i % len(APP_COLORS)] for i, a in enumerate(apps)}
    for p in points:
        canvas.parts.append(_marker(VIEW_MARKERS.get(p["view"], "circle"),
                                    canvas.px(float(p["w"])), canvas.py(float(p["u"])), colors[p["app"]]))
    row = 0
    for a in apps:
        canvas.legend(row, a, lambda x, y, c=colors[a]: _marker("circle", x + 10, y, c))
        row += 1
    for view, shape in VIEW_MARKERS.items():
        canvas.legend(row, view, lambda x, y, s=shape: _marker(s, x + 10, y, "#555555"))
        row += 1
    return canvas.render()


def write_svg(text: str, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
