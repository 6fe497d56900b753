"""Figures built from aggregate and parity CSV contents.

Trend figures facet by (p, n): rows are p, columns are n. Empirical means
carry +-2 SE bars (the per-cell ``emp_2se`` column); theory is a dashed line.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from vimp.simlab import SimResult, through_origin_slope
from vimp.svgplot import PALETTE, Figure, Panel, facet_layout

MAX_SCATTER_PER_FACET = 400

_LABELS = {"pap": "PaP", "loco": "LOCO", "c_hat": "c", "t": "t"}


def _facets(results: Sequence[SimResult]) -> tuple[list[int], list[int]]:
    return sorted({r.p for r in results}), sorted({r.n for r in results})


def _limits(values: Sequence[float]) -> tuple[float, float]:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    return min(finite), max(finite)


def _theory_of(r: SimResult) -> float:
    return r.theory_corrected if math.isfinite(r.theory_corrected) else r.theory_raw


def trend_figure(results: Sequence[SimResult], metrics: Sequence[str], title: str, ylabel: str) -> str:
    """Metric vs delta with +-2 SE bars and theory overlaid, one panel per (p, n)."""
    results = [r for r in results if r.metric in metrics]
    ps, ns = _facets(results)
    width, height, rects = facet_layout(max(len(ps), 1), max(len(ns), 1))
    fig = Figure(width, height, title)
    for row, p in enumerate(ps):
        for col, n in enumerate(ns):
            cell = sorted((r for r in results if r.p == p and r.n == n), key=lambda r: r.delta)
            if not cell:
                continue
            lo, hi = _limits([v for r in cell for v in (r.emp_mean - r.emp_2se, r.emp_mean + r.emp_2se,
                                                        _theory_of(r))])
            panel = Panel(fig, *rects[row][col], xlim=_limits([r.delta for r in cell]), ylim=(lo, hi),
                          title=f"p = {p}, n = {n}")
            panel.axes(xlabel="delta", ylabel=ylabel if col == 0 else "")
            legend = []
            for k, metric in enumerate(metrics):
                series = [r for r in cell if r.metric == metric]
                if not series:
                    continue
                color = PALETTE[k % len(PALETTE)]
                xs = [r.delta for r in series]
                panel.line(xs, [_theory_of(r) for r in series], f"{metric}-theory", color, dashed=True)
                panel.errorbars(xs, [r.emp_mean for r in series], [r.emp_2se for r in series],
                                f"{metric}-empirical", color)
                legend.append((_LABELS.get(metric, metric), color))
            if row == 0 and col == 0:
                panel.legend(legend)
    return fig.render()


def bias_figure(results: Sequence[SimResult], metrics: Sequence[str] = ("pap", "loco"),
                title: str = "Relative difference from theory vs n") -> str:
    """Delta-averaged relative difference vs log10(n), raw and corrected theory, one panel per (metric, p)."""
    results = [r for r in results if r.metric in metrics]
    ps = sorted({r.p for r in results})
    width, height, rects = facet_layout(max(len(metrics), 1), max(len(ps), 1))
    fig = Figure(width, height, title)
    for row, metric in enumerate(metrics):
        for col, p in enumerate(ps):
            cell = [r for r in results if r.metric == metric and r.p == p]
            if not cell:
                continue
            ns = sorted({r.n for r in cell})
            curves = {}
            for label, theory_of in (("raw", lambda r: r.theory_raw), ("corrected", lambda r: r.theory_corrected)):
                ys = []
                for n in ns:
                    rel = [(r.emp_mean - theory_of(r)) / theory_of(r) for r in cell
                           if r.n == n and math.isfinite(theory_of(r)) and theory_of(r) != 0.0]
                    ys.append(float(np.mean(rel)) if rel else math.nan)
                curves[label] = ys
            xs = [math.log10(n) for n in ns]
            lo, hi = _limits(curves["raw"] + curves["corrected"] + [0.0])
            panel = Panel(fig, *rects[row][col], xlim=_limits(xs), ylim=(lo, hi),
                          title=f"{_LABELS.get(metric, metric)}, p = {p}")
            panel.axes(xlabel="log10 n", ylabel="relative difference" if col == 0 else "")
            panel.line(xs, [0.0] * len(xs), "zero", "#888888", dashed=True, width=0.8)
            for k, (label, ys) in enumerate(curves.items()):
                panel.errorbars(xs, ys, [0.0] * len(ys), f"{metric}-{label}", PALETTE[k])
            if row == 0 and col == 0:
                panel.legend([("raw theory", PALETTE[0]), ("corrected theory", PALETTE[1])])
    return fig.render()


def parity_figure(x: np.ndarray, y: np.ndarray, keys: Sequence[tuple[float, int, int]],
                  title: str = "Scaled t vs adjusted LOCO") -> str:
    """Scatter per (p, n) facet with the unit-slope line and the fitted through-origin slope.

    Slopes use every point; each facet draws at most ``MAX_SCATTER_PER_FACET``
    evenly spaced points to keep the file small.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    facets: dict[tuple[int, int], list[int]] = {}
    for k, (_, p, n) in enumerate(keys):
        facets.setdefault((p, n), []).append(k)
    ps = sorted({p for p, _ in facets})
    ns = sorted({n for _, n in facets})
    overall = through_origin_slope(x, y) if x.size and float(x @ x) > 0 else math.nan
    width, height, rects = facet_layout(max(len(ps), 1), max(len(ns), 1), panel_w=200, panel_h=200)
    fig = Figure(width, height, f"{title} (pooled slope {overall:.4f})")
    for (p, n), idx in sorted(facets.items()):
        idx = np.asarray(idx)
        fx, fy = x[idx], y[idx]
        slope = through_origin_slope(fx, fy) if float(fx @ fx) > 0 else math.nan
        if idx.size > MAX_SCATTER_PER_FACET:
            keep = np.linspace(0, idx.size - 1, MAX_SCATTER_PER_FACET).round().astype(int)
            fx, fy = fx[keep], fy[keep]
        lo, hi = _limits(list(x[idx]) + list(y[idx]) + [0.0])
        panel = Panel(fig, *rects[ps.index(p)][ns.index(n)], xlim=(lo, hi), ylim=(lo, hi),
                      title=f"p = {p}, n = {n}")
        panel.axes(xlabel="t * sqrt(s2 / (n - 1))", ylabel="adjusted LOCO" if ns.index(n) == 0 else "")
        panel.scatter(fx, fy, f"parity-p{p}-n{n}", PALETTE[0])
        panel.line([lo, hi], [lo, hi], "unit-slope", "#d62728", dashed=True)
        panel.note(f"slope = {slope:.4f}")
    return fig.render()
