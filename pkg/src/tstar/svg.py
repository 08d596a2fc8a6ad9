"""Bare-bones SVG charts: line plots, stem plots and box plots.

Output is plain text built from fixed-precision numbers, so identical
inputs give byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 400
ML, MR, MT, MB = 70, 20, 36, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _ticks(lo: float, hi: float, k: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    step = 10 ** np.floor(np.log10((hi - lo) / k))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= k:
            step *= m
            break
    return np.arange(np.ceil(lo / step) * step, hi + 1e-9 * step, step)


class _Frame:
    def __init__(self, xlim, ylim, title: str, xlabel: str, ylabel: str, xticks: bool = True):
        self.xticks = xticks
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
            f'<text x="{W / 2:.1f}" y="{H - 10}" text-anchor="middle">{escape(xlabel)}</text>',
            f'<text x="16" y="{H / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {H / 2:.1f})">{escape(ylabel)}</text>',
        ]
        self._axes()

    def px(self, x):
        return ML + (np.asarray(x, float) - self.x0) / (self.x1 - self.x0) * (W - ML - MR)

    def py(self, y):
        return H - MB - (np.asarray(y, float) - self.y0) / (self.y1 - self.y0) * (H - MT - MB)

    def _axes(self) -> None:
        b, l = H - MB, ML
        self.parts.append(f'<path d="M{l},{MT} V{b} H{W - MR}" fill="none" stroke="black"/>')
        for t in _ticks(self.x0, self.x1) if self.xticks else ():
            x = float(self.px(t))
            self.parts.append(f'<line x1="{x:.2f}" y1="{b}" x2="{x:.2f}" y2="{b + 5}" stroke="black"/>')
            self.parts.append(f'<text x="{x:.2f}" y="{b + 18}" text-anchor="middle">{t:.4g}</text>')
        for t in _ticks(self.y0, self.y1):
            y = float(self.py(t))
            self.parts.append(f'<line x1="{l - 5}" y1="{y:.2f}" x2="{l}" y2="{y:.2f}" stroke="black"/>')
            self.parts.append(f'<text x="{l - 8}" y="{y + 4:.2f}" text-anchor="end">{t:.4g}</text>')

    def polyline(self, x, y, color: str, width: float = 1.0) -> None:
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(self.px(x), self.py(y)))
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"/>')

    def hline(self, y: float, color: str = "gray", dash: bool = True) -> None:
        yy = float(self.py(y))
        d = ' stroke-dasharray="4,3"' if dash else ""
        self.parts.append(f'<line x1="{ML}" y1="{yy:.2f}" x2="{W - MR}" y2="{yy:.2f}" '
                          f'stroke="{color}"{d}/>')

    def legend(self, labels: Sequence[str]) -> None:
        for i, lab in enumerate(labels):
            y = MT + 14 * i + 6
            c = COLORS[i % len(COLORS)]
            self.parts.append(f'<line x1="{W - MR - 150}" y1="{y}" x2="{W - MR - 130}" y2="{y}" '
                              f'stroke="{c}" stroke-width="2"/>')
            self.parts.append(f'<text x="{W - MR - 125}" y="{y + 4}">{escape(lab)}</text>')

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.parts + ["</svg>"]) + "\n")


def _pad(lo: float, hi: float) -> tuple[float, float]:
    d = (hi - lo) or 1.0
    return lo - 0.04 * d, hi + 0.04 * d


def line_plot(path, curves: Sequence[tuple[np.ndarray, np.ndarray]], title: str = "",
              xlabel: str = "", ylabel: str = "", labels: Sequence[str] | None = None,
              max_points: int = 4000) -> None:
    """One polyline per ``(x, y)`` pair; long curves are decimated to ``max_points``."""
    xs = np.concatenate([np.asarray(c[0], float) for c in curves])
    ys = np.concatenate([np.asarray(c[1], float) for c in curves])
    f = _Frame((xs.min(), xs.max()), _pad(ys.min(), ys.max()), title, xlabel, ylabel)
    for i, (x, y) in enumerate(curves):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if x.size > max_points:
            keep = np.linspace(0, x.size - 1, max_points).astype(int)
            x, y = x[keep], y[keep]
        f.polyline(x, y, COLORS[i % len(COLORS)])
    if labels:
        f.legend(labels)
    f.save(path)


def stem_plot(path, values: np.ndarray, band: float | None = None, title: str = "",
              xlabel: str = "lag", ylabel: str = "") -> None:
    """Vertical bars at lags ``0..k`` with an optional symmetric band."""
    v = np.asarray(values, float)
    lo = min(v.min(), -(band or 0.0), 0.0)
    f = _Frame((-0.5, v.size - 0.5), _pad(lo, max(v.max(), band or 0.0)), title, xlabel, ylabel)
    f.hline(0.0, "black", dash=False)
    if band:
        f.hline(band)
        f.hline(-band)
    y0 = float(f.py(0.0))
    for k, val in enumerate(v):
        x, y = float(f.px(k)), float(f.py(val))
        f.parts.append(f'<line x1="{x:.2f}" y1="{y0:.2f}" x2="{x:.2f}" y2="{y:.2f}" '
                       f'stroke="{COLORS[0]}" stroke-width="3"/>')
    f.save(path)


def box_plot(path, groups: dict[str, np.ndarray], title: str = "", ylabel: str = "") -> None:
    """Tukey box plots (whiskers at 1.5 IQR), one per group, on a shared axis."""
    names = list(groups)
    allv = np.concatenate([np.asarray(groups[k], float) for k in names])
    f = _Frame((0.5, len(names) + 0.5), _pad(allv.min(), allv.max()), title, "", ylabel,
               xticks=False)
    for i, k in enumerate(names, start=1):
        v = np.sort(np.asarray(groups[k], float))
        q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
        iqr = q3 - q1
        lo = v[v >= q1 - 1.5 * iqr].min()
        hi = v[v <= q3 + 1.5 * iqr].max()
        xc = float(f.px(i))
        half = 0.25 * (W - ML - MR) / len(names)
        yq1, yq3, ym = float(f.py(q1)), float(f.py(q3)), float(f.py(med))
        c = COLORS[(i - 1) % len(COLORS)]
        f.parts.append(f'<rect x="{xc - half:.2f}" y="{yq3:.2f}" width="{2 * half:.2f}" '
                       f'height="{max(yq1 - yq3, 0.5):.2f}" fill="none" stroke="{c}"/>')
        f.parts.append(f'<line x1="{xc - half:.2f}" y1="{ym:.2f}" x2="{xc + half:.2f}" '
                       f'y2="{ym:.2f}" stroke="{c}" stroke-width="2"/>')
        for a, b in ((q3, hi), (q1, lo)):
            f.parts.append(f'<line x1="{xc:.2f}" y1="{float(f.py(a)):.2f}" x2="{xc:.2f}" '
                           f'y2="{float(f.py(b)):.2f}" stroke="{c}"/>')
        for o in v[(v < lo) | (v > hi)]:
            f.parts.append(f'<circle cx="{xc:.2f}" cy="{float(f.py(o)):.2f}" r="2" '
                           f'fill="none" stroke="{c}"/>')
        f.parts.append(f'<text x="{xc:.2f}" y="{H - MB + 18}" text-anchor="middle">'
                       f'{escape(k)}</text>')
    f.save(path)
