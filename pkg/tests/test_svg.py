import xml.etree.ElementTree as ET

import numpy as np
import pytest

from vimp import figures, simlab
from vimp.svgplot import Figure, Panel, facet_layout, nice_ticks

SVG = "{http://www.w3.org/2000/svg}"


def series(svg_text):
    root = ET.fromstring(svg_text.encode("utf-8"))
    out = {}
    for g in root.iter(f"{SVG}g"):
        name = g.get("data-series")
        if name is None:
            continue
        xs = [float(v) for v in g.get("data-x").split(",") if v]
        ys = [float(v) for v in g.get("data-y").split(",") if v]
        out.setdefault(name, []).append((xs, ys))
    return root, out


class TestPrimitives:
    def test_ticks(self):
        assert nice_ticks(0, 1, 5) == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
        assert nice_ticks(2, 2) == [2]
        assert nice_ticks(float("nan"), 1) == []

    def test_document_is_valid_and_escaped(self):
        fig = Figure(200, 100, title="a < b & c")
        panel = Panel(fig, 30, 20, 150, 60, (0, 1), (0, 1), title="p = 3")
        panel.axes("x", "y")
        panel.line([0, 0.5, 1], [0, 1, float("nan")], "curve", "#000")
        panel.errorbars([0, 1], [0.2, 0.4], [0.1, 0.0], "pts", "#f00")
        panel.scatter([0.1], [0.9], "sc", "#00f")
        panel.legend([("one", "#000")])
        panel.note("slope = 1")
        root, s = series(fig.render())
        assert root.tag == f"{SVG}svg"
        assert s["curve"][0] == ([0.0, 0.5], [0.0, 1.0])
        assert "a &lt; b &amp; c" in fig.render()

    def test_degenerate_limits(self):
        panel = Panel(Figure(10, 10), 0, 0, 10, 10, (1.0, 1.0), (float("nan"), float("nan")))
        assert panel.xlim[0] < 1.0 < panel.xlim[1] and panel.ylim == (0.0, 1.0)

    def test_points_stay_inside_panel(self):
        fig = Figure(300, 300)
        panel = Panel(fig, 50, 50, 200, 200, (0, 1), (0, 1))
        panel.errorbars([0.5], [0.5], [10.0], "wide", "#000")
        root = ET.fromstring(fig.render())
        for line in root.iter(f"{SVG}line"):
            for attr in ("y1", "y2"):
                assert 50 <= float(line.get(attr)) <= 250

    def test_layout(self):
        w, h, rects = facet_layout(2, 3)
        assert len(rects) == 2 and len(rects[0]) == 3
        x0, y0, pw, ph = rects[1][2]
        assert x0 + pw < w and y0 + ph < h


def _one_cell_results():
    return simlab.aggregate(simlab.run_cell(0.3, 3, 40, reps=3))


class TestFigures:
    def test_single_cell_single_panel(self):
        text = figures.trend_figure(_one_cell_results(), ("pap", "loco"), "t", "importance")
        root, s = series(text)
        assert len(s["pap-empirical"]) == 1 and len(s["loco-theory"]) == 1
        assert sum(1 for r in root.iter(f"{SVG}rect") if r.get("fill") == "none") == 1

    def test_trend_ordering(self):
        recs = []
        for d in (0.0, 0.33, 0.66, 0.99):
            recs += simlab.run_cell(d, 3, 200, reps=10)
        _, s = series(figures.trend_figure(simlab.aggregate(recs), ("pap", "loco"), "t", "importance"))
        (xs, pap), = s["pap-empirical"]
        (_, loco), = s["loco-empirical"]
        assert xs == sorted(xs)
        assert np.all(np.diff(pap) > 0) and np.all(np.diff(loco) < 0)

    def test_parity_figure(self):
        recs = simlab.run_cell(0.2, 3, 200, reps=200)
        x, y, keys = simlab.parity_points(recs)
        text = figures.parity_figure(x, y, keys)
        root, s = series(text)
        assert len(s["parity-p3-n200"][0][0]) == figures.MAX_SCATTER_PER_FACET
        assert s["unit-slope"][0][0] == s["unit-slope"][0][1]
        slope = simlab.through_origin_slope(x, y)
        assert f"pooled slope {slope:.4f}" in text

    def test_bias_figure(self):
        recs = simlab.run_cell(0.3, 3, 40, reps=3) + simlab.run_cell(0.3, 3, 400, reps=3)
        _, s = series(figures.bias_figure(simlab.aggregate(recs)))
        (xs, _), = s["pap-raw"]
        assert xs == pytest.approx([np.log10(40), np.log10(400)])
