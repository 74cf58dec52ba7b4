"""Standalone SVG figures with JSON twins.

Every renderer returns ``(svg_text, twin)`` where ``twin`` is a plain dict
holding the drawn geometry, so callers and tests never need to parse SVG.
Output is byte-stable: no timestamps, no generated ids, fixed number format.
"""
from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynamics import RegressionFit, SankeyGeometry
from .embedding import NarrativeGraph
from .topicmodel import CooccurrenceMatrix

SVG_NS = "http://www.w3.org/2000/svg"

# hot -> cold; position encodes topic relevance rank
DEFAULT_PALETTE = (
    "#d73027", "#f46d43", "#fdae61", "#fee08b", "#d9ef8b",
    "#a6d96a", "#66bd63", "#1a9850", "#74add1", "#4575b4",
)

_HEX = re.compile(r"^#[0-9a-fA-F]{6}$")


@dataclass(frozen=True)
class StyleSpec:
    palette: tuple[str, ...] = DEFAULT_PALETTE
    node_radius: float = 6.0
    font_family: str = "Helvetica, Arial, sans-serif"
    font_size: float = 10.0
    width: float = 800.0
    height: float = 800.0
    margin: float = 40.0
    edge_color: str = "#999999"

    def __post_init__(self):
        bad = [c for c in self.palette if not _HEX.match(c)]
        if bad:
            raise ValueError(f"invalid palette colours: {bad}")

    def color(self, rank: int) -> str:
        if rank >= len(self.palette):
            raise ValueError(f"palette has {len(self.palette)} colours, rank {rank} requested")
        return self.palette[rank]


def _f(v: float) -> str:
    s = f"{float(v):.2f}"
    return "0.00" if s == "-0.00" else s


def _svg_root(style: StyleSpec, width=None, height=None) -> ET.Element:
    w = style.width if width is None else width
    h = style.height if height is None else height
    root = ET.Element("svg", {"xmlns": SVG_NS, "version": "1.1", "width": _f(w),
                              "height": _f(h), "viewBox": f"0 0 {_f(w)} {_f(h)}"})
    ET.SubElement(root, "rect", {"x": "0", "y": "0", "width": _f(w), "height": _f(h),
                                 "fill": "#ffffff"})
    return root


def _text(parent, x, y, label, style: StyleSpec, anchor="middle", cls=None):
    attrs = {"x": _f(x), "y": _f(y), "font-family": style.font_family,
             "font-size": _f(style.font_size), "text-anchor": anchor}
    if cls:
        attrs["class"] = cls
    el = ET.SubElement(parent, "text", attrs)
    el.text = label
    return el


def _serialize(root: ET.Element) -> str:
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def _fit_to_canvas(positions: np.ndarray, style: StyleSpec) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    lo, hi = pos.min(axis=0), pos.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    inner = np.array([style.width, style.height]) - 2 * style.margin
    s = float(np.min(inner / span))
    centre = (lo + hi) / 2
    return (pos - centre) * s + np.array([style.width, style.height]) / 2


def _check_positions(positions, n: int) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[0] < n or pos.shape[1] != 2:
        raise ValueError(f"missing positions: need {n} (x, y) pairs")
    if not np.isfinite(pos[:n]).all():
        raise ValueError("non-finite node position")
    return pos[:n]


def render_topic_graph(keywords: Sequence[str], topic_ranks: Sequence[int], positions,
                       cooccurrence: CooccurrenceMatrix, style: StyleSpec = StyleSpec()):
    """Keyword nodes coloured by the relevance rank of their topic (0 = hottest)."""
    n = len(keywords)
    pos = _fit_to_canvas(_check_positions(positions, n), style)
    index = {k: i for i, k in enumerate(cooccurrence.keywords)}
    root = _svg_root(style)
    g_edges = ET.SubElement(root, "g", {"class": "edges", "stroke": style.edge_color,
                                        "stroke-opacity": "0.6"})
    edges = []
    for i, j, w in cooccurrence.edges():
        a, b = cooccurrence.keywords[i], cooccurrence.keywords[j]
        ia, ib = keywords.index(a), keywords.index(b)
        ET.SubElement(g_edges, "line", {"x1": _f(pos[ia, 0]), "y1": _f(pos[ia, 1]),
                                        "x2": _f(pos[ib, 0]), "y2": _f(pos[ib, 1]),
                                        "stroke-width": "1.00"})
        edges.append({"source": a, "target": b, "count": w})
    g_nodes = ET.SubElement(root, "g", {"class": "nodes"})
    nodes = []
    for i, (kw, rank) in enumerate(zip(keywords, topic_ranks)):
        if kw not in index:
            raise ValueError(f"keyword {kw!r} missing from co-occurrence matrix")
        fill = style.color(int(rank))
        ET.SubElement(g_nodes, "circle", {"class": "node", "cx": _f(pos[i, 0]), "cy": _f(pos[i, 1]),
                                          "r": _f(style.node_radius), "fill": fill,
                                          "stroke": "#333333", "stroke-width": "0.50"})
        _text(g_nodes, pos[i, 0], pos[i, 1] - style.node_radius - 2, kw, style, cls="label")
        nodes.append({"keyword": kw, "topic_rank": int(rank), "fill": fill,
                      "x": float(pos[i, 0]), "y": float(pos[i, 1])})
    twin = {"figure": "topic_network_graph", "threshold": cooccurrence.threshold,
            "nodes": nodes, "edges": edges}
    return _serialize(root), twin


def render_narrative_graph(positions, graph: NarrativeGraph, radius_rank: Sequence[float],
                           style: StyleSpec = StyleSpec(), title: str = "", color_rank: int = 0):
    """Radial term graph: ``positions`` lie in the unit disk, centre = strongest context."""
    n = len(graph.nodes)
    pos = _check_positions(positions, n)
    cx, cy = style.width / 2, style.height / 2
    R = min(style.width, style.height) / 2 - style.margin
    canvas = np.column_stack([cx + R * pos[:, 0], cy - R * pos[:, 1]])
    root = _svg_root(style)
    if title:
        _text(root, cx, style.margin / 2, title, style, cls="title")
    ET.SubElement(root, "circle", {"class": "guide", "cx": _f(cx), "cy": _f(cy), "r": _f(R),
                                   "fill": "none", "stroke": "#dddddd", "stroke-width": "1.00"})
    g_edges = ET.SubElement(root, "g", {"class": "edges", "stroke": style.edge_color,
                                        "stroke-opacity": "0.5"})
    weights = [w for _, _, w in graph.edges]
    wmax = max(weights) if weights else 1.0
    for i, j, w in graph.edges:
        ET.SubElement(g_edges, "line", {"x1": _f(canvas[i, 0]), "y1": _f(canvas[i, 1]),
                                        "x2": _f(canvas[j, 0]), "y2": _f(canvas[j, 1]),
                                        "stroke-width": _f(0.5 + 2.0 * max(w, 0) / wmax)})
    fill = style.color(color_rank)
    g_nodes = ET.SubElement(root, "g", {"class": "nodes"})
    nodes = []
    for i, term in enumerate(graph.nodes):
        radius = float(np.hypot(pos[i, 0], pos[i, 1]))
        ET.SubElement(g_nodes, "circle", {"class": "node", "cx": _f(canvas[i, 0]), "cy": _f(canvas[i, 1]),
                                          "r": _f(style.node_radius), "fill": fill,
                                          "stroke": "#333333", "stroke-width": "0.50"})
        _text(g_nodes, canvas[i, 0], canvas[i, 1] - style.node_radius - 2, term, style, cls="label")
        nodes.append({"node": term, "x": float(pos[i, 0]), "y": float(pos[i, 1]), "radius": radius,
                      "radius_rank": float(radius_rank[i])})
    twin = {"figure": "narrative_network_graph", "title": title, "threshold": graph.threshold,
            "nodes": nodes,
            "edges": [{"source": graph.nodes[i], "target": graph.nodes[j], "weight": w}
                      for i, j, w in graph.edges]}
    return _serialize(root), twin


def _ribbon_path(x0, x1, y0, y1, t) -> str:
    xm = (x0 + x1) / 2
    return (f"M{_f(x0)},{_f(y0)} C{_f(xm)},{_f(y0)} {_f(xm)},{_f(y1)} {_f(x1)},{_f(y1)} "
            f"L{_f(x1)},{_f(y1 + t)} C{_f(xm)},{_f(y1 + t)} {_f(xm)},{_f(y0 + t)} {_f(x0)},{_f(y0 + t)} Z")


def render_sankey(geometry: SankeyGeometry, style: StyleSpec = StyleSpec(), title: str = ""):
    """Narrative flow diagram; left column period T, right column T+1."""
    pad = style.margin
    root = _svg_root(style, geometry.width + 2 * pad + 240, geometry.height + 2 * pad)
    if title:
        _text(root, pad + geometry.width / 2, pad / 2, title, style, cls="title")
    body = ET.SubElement(root, "g", {"transform": f"translate({_f(pad + 120)},{_f(pad)})"})
    rank_of = {(n["column"], n["id"]): n["rank"] for n in geometry.nodes}
    g_rib = ET.SubElement(body, "g", {"class": "ribbons", "fill-opacity": "0.45"})
    for r in geometry.ribbons:
        color = style.color(rank_of[("left", r["source"])] % len(style.palette))
        ET.SubElement(g_rib, "path", {"class": "ribbon",
                                      "d": _ribbon_path(r["x0"], r["x1"], r["y0"], r["y1"], r["thickness"]),
                                      "fill": color})
    g_nodes = ET.SubElement(body, "g", {"class": "nodes"})
    for n in geometry.nodes:
        color = style.color(n["rank"] % len(style.palette))
        ET.SubElement(g_nodes, "rect", {"class": "node", "x": _f(n["x"]), "y": _f(n["y"]),
                                        "width": _f(n["width"]), "height": _f(n["height"]),
                                        "fill": color})
        left = n["column"] == "left"
        tx = n["x"] - 4 if left else n["x"] + n["width"] + 4
        _text(g_nodes, tx, n["y"] + n["height"] / 2 + style.font_size / 3,
              f"{n['rank'] + 1} - {n['label']}", style, anchor="end" if left else "start", cls="label")
    twin = {"figure": "narrative_flow_diagram", "title": title, **geometry.to_dict()}
    return _serialize(root), twin


def _padded(v: np.ndarray, frac: float = 0.05) -> tuple[float, float]:
    lo, hi = float(np.min(v)), float(np.max(v))
    span = hi - lo
    pad = frac * span if span > 0 else (abs(lo) * frac or 1.0)
    return lo - pad, hi + pad


def render_scatter(fit: RegressionFit, style: StyleSpec = StyleSpec(), title: str = "",
                   x_label: str = "period T", y_label: str = "period T+1"):
    """Scatter of per-term frequencies with the fitted line and marginal histograms."""
    m = style.margin
    hist_band = 0.18 * min(style.width, style.height)
    px0, px1 = m, style.width - m - hist_band
    py0, py1 = m + hist_band, style.height - m  # plot top, plot bottom (canvas y)
    xlim, ylim = _padded(fit.x), _padded(fit.y)

    def X(v):
        return px0 + (v - xlim[0]) / (xlim[1] - xlim[0]) * (px1 - px0)

    def Y(v):
        return py1 - (v - ylim[0]) / (ylim[1] - ylim[0]) * (py1 - py0)

    root = _svg_root(style)
    if title:
        _text(root, style.width / 2, m / 2, title, style, cls="title")
    ET.SubElement(root, "rect", {"class": "plot-area", "x": _f(px0), "y": _f(py0),
                                 "width": _f(px1 - px0), "height": _f(py1 - py0),
                                 "fill": "none", "stroke": "#333333", "stroke-width": "0.80"})
    _text(root, (px0 + px1) / 2, py1 + m * 0.7, x_label, style, cls="axis-label")
    _text(root, px0 - m * 0.6, (py0 + py1) / 2, y_label, style, cls="axis-label")
    g_pts = ET.SubElement(root, "g", {"class": "points", "fill": style.palette[-1], "fill-opacity": "0.7"})
    for a, b in zip(fit.x, fit.y):
        ET.SubElement(g_pts, "circle", {"cx": _f(X(a)), "cy": _f(Y(b)), "r": "3.00"})
    x_lo, x_hi = float(np.min(fit.x)), float(np.max(fit.x))
    line = [(x_lo, fit.intercept + fit.slope * x_lo), (x_hi, fit.intercept + fit.slope * x_hi)]
    ET.SubElement(root, "line", {"class": "regression", "x1": _f(X(line[0][0])), "y1": _f(Y(line[0][1])),
                                 "x2": _f(X(line[1][0])), "y2": _f(Y(line[1][1])),
                                 "stroke": style.palette[0], "stroke-width": "1.50"})

    bars_x, bars_y = [], []
    g_hx = ET.SubElement(root, "g", {"class": "hist-x", "fill": "#bbbbbb"})
    cmax = max(max(fit.hist_x.counts, default=0), 1)
    for c, lo, hi in zip(fit.hist_x.counts, fit.hist_x.edges[:-1], fit.hist_x.edges[1:]):
        h = (hist_band - 6) * c / cmax
        x0, x1 = X(lo), X(hi)
        ET.SubElement(g_hx, "rect", {"x": _f(x0), "y": _f(py0 - 3 - h), "width": _f(x1 - x0),
                                     "height": _f(h)})
        bars_x.append({"count": c, "height": h})
    g_hy = ET.SubElement(root, "g", {"class": "hist-y", "fill": "#bbbbbb"})
    cmax = max(max(fit.hist_y.counts, default=0), 1)
    for c, lo, hi in zip(fit.hist_y.counts, fit.hist_y.edges[:-1], fit.hist_y.edges[1:]):
        w = (hist_band - 6) * c / cmax
        y0, y1 = Y(hi), Y(lo)
        ET.SubElement(g_hy, "rect", {"x": _f(px1 + 3), "y": _f(y0), "width": _f(w),
                                     "height": _f(y1 - y0)})
        bars_y.append({"count": c, "width": w})
    _text(root, px0 + 4, py0 + style.font_size + 4,
          f"y = {fit.slope:.3g} x + {fit.intercept:.3g}   r² = {fit.r_squared:.3f}",
          style, anchor="start", cls="equation")
    twin = {"figure": "frequency_regression", "title": title,
            "x_extent": list(xlim), "y_extent": list(ylim),
            "data_x_range": [x_lo, x_hi], "data_y_range": [float(np.min(fit.y)), float(np.max(fit.y))],
            "regression_line": [list(p) for p in line],
            "plot_box": {"x0": px0, "x1": px1, "y_top": py0, "y_bottom": py1},
            **fit.to_dict(), "bars_x": bars_x, "bars_y": bars_y}
    return _serialize(root), twin


def write_figure(stem: str | Path, svg: str, twin: dict) -> tuple[Path, Path]:
    """Write ``<stem>.svg`` and its ``<stem>.json`` twin."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    svg_path, json_path = stem.with_suffix(".svg"), stem.with_suffix(".json")
    svg_path.write_text(svg, "utf-8")
    json_path.write_text(json.dumps(twin, indent=1, sort_keys=True), "utf-8")
    return svg_path, json_path
