"""Dependency-free SVG rendering of partitions, fields, weight curves and trajectories.

Output is deterministic: coordinates are printed with fixed precision and
colours come from a fixed palette.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

SIZE = 800
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _f(v: float) -> str:
    return f"{v:.2f}"


class Canvas:
    """Maps a square world window onto the 800 x 800 view box (y axis up)."""

    def __init__(self, lo: float, hi: float, title: str = ""):
        self.lo, self.hi = lo, hi
        self.items: list[str] = []
        self.title = title

    def px(self, x: float, y: float) -> tuple[float, float]:
        s = SIZE / (self.hi - self.lo)
        return (x - self.lo) * s, SIZE - (y - self.lo) * s

    def line(self, x0, y0, x1, y1, color="#000", width=1.0):
        a, b = self.px(x0, y0)
        c, d = self.px(x1, y1)
        self.items.append(
            f'<line x1="{_f(a)}" y1="{_f(b)}" x2="{_f(c)}" y2="{_f(d)}" stroke="{color}" stroke-width="{width}"/>'
        )

    def arrow(self, x, y, dx, dy, color="#000", width=1.0):
        self.line(x, y, x + dx, y + dy, color, width)
        L = math.hypot(dx, dy)
        if L == 0:
            return
        ux, uy = dx / L, dy / L
        head = 0.25 * L
        for sgn in (1, -1):
            hx = x + dx - head * (ux * 0.866 - sgn * uy * 0.5)
            hy = y + dy - head * (uy * 0.866 + sgn * ux * 0.5)
            self.line(x + dx, y + dy, hx, hy, color, width)

    def polyline(self, pts, color="#000", width=1.5):
        if len(pts) == 0:
            return
        s = " ".join(f"{_f(a)},{_f(b)}" for a, b in (self.px(x, y) for x, y in pts))
        self.items.append(f'<polyline points="{s}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def sector(self, r, t0, t1, color, opacity=0.35):
        pts = [(0.0, 0.0)] + [(r * math.cos(t), r * math.sin(t)) for t in np.linspace(t0, t1, 48)]
        s = " ".join(f"{_f(a)},{_f(b)}" for a, b in (self.px(x, y) for x, y in pts))
        self.items.append(f'<polygon points="{s}" fill="{color}" fill-opacity="{opacity}" stroke="{color}"/>')

    def text(self, x, y, label, size=14):
        a, b = self.px(x, y)
        self.items.append(f'<text x="{_f(a)}" y="{_f(b)}" font-size="{size}" font-family="sans-serif">{label}</text>')

    def axes(self):
        self.line(self.lo, 0, self.hi, 0, "#999", 0.8)
        self.line(0, self.lo, 0, self.hi, "#999", 0.8)

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" '
            f'viewBox="0 0 {SIZE} {SIZE}">\n'
            '<rect width="100%" height="100%" fill="white"/>\n'
        )
        if self.title:
            head += f'<title>{self.title}</title>\n'
        return head + "\n".join(self.items) + "\n</svg>\n"


def _gray_field(canvas: Canvas, H, extent: float, count: int = 15):
    H = np.asarray(H, dtype=float)
    grid = np.linspace(-extent, extent, count)
    vecs = [H @ np.array([x, y]) for x in grid for y in grid]
    top = max((np.linalg.norm(v) for v in vecs), default=1.0) or 1.0
    step = 0.8 * (grid[1] - grid[0]) / top
    k = 0
    for x in grid:
        for y in grid:
            v = vecs[k] * step
            canvas.arrow(x, y, v[0], v[1], "#bbbbbb", 0.8)
            k += 1


def partition_svg(cells: Sequence[dict], H=None) -> str:
    """Pie sectors per cell with the quantized direction drawn from each sector's middle."""
    c = Canvas(-1.6, 1.6, "partition")
    if H is not None:
        _gray_field(c, H, 1.5)
    c.axes()
    top = max((math.hypot(*cell["d"]) for cell in cells), default=1.0) or 1.0
    for i, cell in enumerate(cells):
        color = PALETTE[i % len(PALETTE)]
        t0, t1 = cell["theta_lo"], cell["theta_hi"]
        c.sector(1.0, t0, t1, color)
        mid = 0.5 * (t0 + t1)
        x, y = math.cos(mid), math.sin(mid)
        d = np.asarray(cell["d"], dtype=float) * (0.35 / top)
        c.arrow(x, y, d[0], d[1], color, 2.0)
        label = "(" + ",".join(f"{v:g}" for v in cell["d"]) + ")"
        c.text(1.25 * x - 0.1, 1.25 * y, label, 12)
    return c.render()


def quiver_svg(points, directions, H=None) -> str:
    """Quantized direction at each sample point of the circle, over the gray continuous field."""
    c = Canvas(-1.6, 1.6, "quiver")
    if H is not None:
        _gray_field(c, H, 1.5)
    c.axes()
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    dirs = np.asarray(directions, dtype=float).reshape(-1, 2)
    top = max(np.max(np.linalg.norm(dirs, axis=1)) if len(dirs) else 1.0, 1e-12)
    for p, d in zip(pts, dirs):
        v = d * (0.15 / top)
        c.arrow(p[0], p[1], v[0], v[1], "#1f77b4", 1.2)
    return c.render()


def _plot_series(series: Sequence[Sequence[float]], xs=None, title="") -> str:
    c = Canvas(-0.08, 1.08, title)
    c.line(0, 0, 1, 0, "#000", 1.0)
    c.line(0, 0, 0, 1, "#000", 1.0)
    series = [np.asarray(s, dtype=float) for s in series if len(s)]
    if not series:
        return c.render()
    length = max(len(s) for s in series)
    lo = min(float(s.min()) for s in series)
    hi = max(float(s.max()) for s in series)
    span = hi - lo if hi > lo else 1.0
    for i, s in enumerate(series):
        x = np.arange(len(s)) / max(1, length - 1) if xs is None else (np.asarray(xs) - xs[0]) / max(1e-12, xs[-1] - xs[0])
        y = (s - lo) / span
        c.polyline(list(zip(x, y)), PALETTE[i % len(PALETTE)])
    c.text(0.0, -0.06, f"{lo:.3g}", 12)
    c.text(0.0, 1.03, f"{hi:.3g}", 12)
    return c.render()


def weights_svg(history) -> str:
    """Weight of every pattern against iteration; curves ending below 1e-3 are omitted."""
    H = np.asarray(history, dtype=float)
    if H.size == 0:
        return _plot_series([], title="weights")
    keep = [H[:, k] for k in range(H.shape[1]) if H[-1, k] > 1e-3]
    return _plot_series(keep, title="weights")


def trajectory_svg(times, columns: dict) -> str:
    """One curve per named column against time; an empty trajectory yields bare axes."""
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        return _plot_series([], title="trajectory")
    return _plot_series(list(columns.values()), xs=times, title="trajectory")
