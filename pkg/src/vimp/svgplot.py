"""Minimal SVG emitter: faceted panels with lines, error bars and scatter.

Only what the figures need. Every data series is written as a ``<g>`` with
``data-series``, ``data-x`` and ``data-y`` attributes so tests (and anyone
curious) can read the plotted numbers back without parsing pixel geometry.
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _num(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _data(values: Sequence[float]) -> str:
    return ",".join(repr(float(v)) for v in values)


def nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(count, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 12))
        v += step
    return ticks


class Figure:
    def __init__(self, width: float, height: float, title: str = "") -> None:
        self.width = width
        self.height = height
        self.parts: list[str] = []
        if title:
            self.text(width / 2, 22, title, size=16, anchor="middle", weight="bold")

    def add(self, fragment: str) -> None:
        self.parts.append(fragment)

    def text(self, x: float, y: float, s: str, size: int = 11, anchor: str = "start", weight: str = "normal",
             rotate: float | None = None) -> None:
        transform = f' transform="rotate({_num(rotate)} {_num(x)} {_num(y)})"' if rotate is not None else ""
        self.add(f'<text x="{_num(x)}" y="{_num(y)}" font-size="{size}" text-anchor="{anchor}" '
                 f'font-weight="{weight}" font-family="sans-serif"{transform}>{escape(s)}</text>')

    def render(self) -> str:
        body = "\n".join(self.parts)
        return (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_num(self.width)}" '
            f'height="{_num(self.height)}" viewBox="0 0 {_num(self.width)} {_num(self.height)}">\n'
            f'<rect x="0" y="0" width="{_num(self.width)}" height="{_num(self.height)}" fill="white"/>\n'
            f"{body}\n</svg>\n"
        )


class Panel:
    """A plotting area with linear axes mapped onto a rectangle of the figure."""

    def __init__(self, fig: Figure, x0: float, y0: float, w: float, h: float, xlim: tuple[float, float],
                 ylim: tuple[float, float], title: str = "") -> None:
        self.fig = fig
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.xlim = self._pad(xlim)
        self.ylim = self._pad(ylim)
        self.title = title

    @staticmethod
    def _pad(lim: tuple[float, float]) -> tuple[float, float]:
        lo, hi = lim
        if not (math.isfinite(lo) and math.isfinite(hi)):
            return 0.0, 1.0
        if hi - lo < 1e-12:
            span = abs(lo) * 0.1 or 1.0
            return lo - span, hi + span
        pad = 0.05 * (hi - lo)
        return lo - pad, hi + pad

    def sx(self, x: float) -> float:
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo) * self.w

    def sy(self, y: float) -> float:
        lo, hi = self.ylim
        return self.y0 + self.h - (y - lo) / (hi - lo) * self.h

    def _clip_y(self, y: float) -> float:
        return min(max(self.sy(y), self.y0), self.y0 + self.h)

    def axes(self, xlabel: str = "", ylabel: str = "") -> None:
        f = self.fig
        f.add(f'<rect x="{_num(self.x0)}" y="{_num(self.y0)}" width="{_num(self.w)}" height="{_num(self.h)}" '
              'fill="none" stroke="#444" stroke-width="1"/>')
        for t in nice_ticks(*self.xlim):
            x = self.sx(t)
            f.add(f'<line x1="{_num(x)}" y1="{_num(self.y0 + self.h)}" x2="{_num(x)}" '
                  f'y2="{_num(self.y0 + self.h + 4)}" stroke="#444"/>')
            f.text(x, self.y0 + self.h + 15, f"{t:g}", size=9, anchor="middle")
        for t in nice_ticks(*self.ylim):
            y = self.sy(t)
            f.add(f'<line x1="{_num(self.x0 - 4)}" y1="{_num(y)}" x2="{_num(self.x0)}" y2="{_num(y)}" '
                  'stroke="#444"/>')
            f.text(self.x0 - 6, y + 3, f"{t:g}", size=9, anchor="end")
        if self.title:
            f.text(self.x0 + self.w / 2, self.y0 - 6, self.title, size=11, anchor="middle")
        if xlabel:
            f.text(self.x0 + self.w / 2, self.y0 + self.h + 30, xlabel, size=10, anchor="middle")
        if ylabel:
            f.text(self.x0 - 36, self.y0 + self.h / 2, ylabel, size=10, anchor="middle", rotate=-90)

    def _open(self, name: str, xs: Sequence[float], ys: Sequence[float], extra: str = "") -> None:
        self.fig.add(f"<g data-series={quoteattr(name)} data-x=\"{_data(xs)}\" data-y=\"{_data(ys)}\"{extra}>")

    def line(self, xs: Sequence[float], ys: Sequence[float], name: str, color: str, dashed: bool = False,
             width: float = 1.5) -> None:
        pts = [(x, y) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
        self._open(name, [p[0] for p in pts], [p[1] for p in pts])
        if pts:
            coords = " ".join(f"{_num(self.sx(x))},{_num(self._clip_y(y))}" for x, y in pts)
            dash = ' stroke-dasharray="5,3"' if dashed else ""
            self.fig.add(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>')
        self.fig.add("</g>")

    def errorbars(self, xs: Sequence[float], means: Sequence[float], half: Sequence[float], name: str,
                  color: str) -> None:
        """Points at ``means`` with vertical bars of +-``half``, joined by a thin line."""
        self._open(name, xs, means, f' data-half="{_data(half)}"')
        coords = []
        for x, m, h in zip(xs, means, half):
            if not (math.isfinite(x) and math.isfinite(m)):
                continue
            px, py = self.sx(x), self._clip_y(m)
            coords.append(f"{_num(px)},{_num(py)}")
            if math.isfinite(h) and h > 0:
                top, bot = self._clip_y(m + h), self._clip_y(m - h)
                self.fig.add(f'<line x1="{_num(px)}" y1="{_num(top)}" x2="{_num(px)}" y2="{_num(bot)}" '
                             f'stroke="{color}" stroke-width="1"/>')
                for yy in (top, bot):
                    self.fig.add(f'<line x1="{_num(px - 3)}" y1="{_num(yy)}" x2="{_num(px + 3)}" y2="{_num(yy)}" '
                                 f'stroke="{color}" stroke-width="1"/>')
            self.fig.add(f'<circle cx="{_num(px)}" cy="{_num(py)}" r="2.5" fill="{color}"/>')
        if len(coords) > 1:
            self.fig.add(f'<polyline points="{" ".join(coords)}" fill="none" stroke="{color}" stroke-width="0.8"/>')
        self.fig.add("</g>")

    def scatter(self, xs: Sequence[float], ys: Sequence[float], name: str, color: str, r: float = 1.6) -> None:
        self._open(name, xs, ys)
        for x, y in zip(xs, ys):
            if math.isfinite(x) and math.isfinite(y):
                self.fig.add(f'<circle cx="{_num(self.sx(x))}" cy="{_num(self._clip_y(y))}" r="{_num(r)}" '
                             f'fill="{color}" fill-opacity="0.45"/>')
        self.fig.add("</g>")

    def legend(self, entries: Sequence[tuple[str, str]]) -> None:
        for k, (label, color) in enumerate(entries):
            y = self.y0 + 12 + 13 * k
            self.fig.add(f'<rect x="{_num(self.x0 + 6)}" y="{_num(y - 7)}" width="8" height="8" fill="{color}"/>')
            self.fig.text(self.x0 + 18, y, label, size=9)

    def note(self, s: str) -> None:
        self.fig.text(self.x0 + self.w - 4, self.y0 + self.h - 6, s, size=9, anchor="end")


def facet_layout(n_rows: int, n_cols: int, panel_w: float = 220, panel_h: float = 160, left: float = 70,
                 top: float = 60, gap_x: float = 60, gap_y: float = 70) -> tuple[float, float, list[list[tuple]]]:
    """Figure size and panel rectangles (x0, y0, w, h) for a grid of facets."""
    rects = [[(left + c * (panel_w + gap_x), top + r * (panel_h + gap_y), panel_w, panel_h)
              for c in range(n_cols)] for r in range(n_rows)]
    width = left + n_cols * panel_w + (n_cols - 1) * gap_x + 30
    height = top + n_rows * panel_h + (n_rows - 1) * gap_y + 50
    return width, height, rects
