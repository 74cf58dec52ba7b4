"""Narrative dynamics: term flows between periods and frequency regressions."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .termextract import NarrativeTermSet

FLOW_MODES = {
    "min_count": "sum over shared terms of min(count in period T, count in period T+1)",
    "shared_terms": "number of shared terms",
}


@dataclass
class TermCounts:
    """Raw term occurrence counts of one slice."""

    counts: dict[str, int]
    total: int

    @classmethod
    def from_documents(cls, documents: Iterable[Sequence[str]]) -> "TermCounts":
        c: Counter = Counter()
        for doc in documents:
            c.update(doc)
        return cls(dict(c), sum(c.values()))

    def count(self, term: str) -> int:
        return self.counts.get(term, 0)


def term_frequency(term: str, counts: TermCounts) -> float:
    """Occurrences of ``term`` per million tokens."""
    if counts.total <= 0:
        raise ValueError("term frequency undefined on an empty slice")
    return 1e6 * counts.count(term) / counts.total


def _ordered(narratives: Sequence[NarrativeTermSet]) -> list[NarrativeTermSet]:
    return sorted(narratives, key=lambda n: (n.rank, n.topic))


def term_owners(narratives: Sequence[NarrativeTermSet]) -> dict[str, int]:
    """Give each term to exactly one narrative of a period.

    A term listed by several narratives goes to the one weighting it highest;
    ties go to the more relevant narrative (earlier position).
    """
    owner: dict[str, int] = {}
    best: dict[str, float] = {}
    for pos, narr in enumerate(narratives):
        for tw in narr.terms:
            if tw.term not in owner or tw.weight > best[tw.term]:
                owner[tw.term] = pos
                best[tw.term] = tw.weight
    return owner


@dataclass
class FlowNode:
    id: str
    label: str
    rank: int
    mass: float
    terms: list[str]


@dataclass
class Flow:
    source: str
    target: str
    magnitude: float
    shared_terms: list[str]


@dataclass
class FlowDiagram:
    left: list[FlowNode]
    right: list[FlowNode]
    flows: list[Flow]
    mode: str = "min_count"
    meta: dict = field(default_factory=dict)

    def outflow(self, source: str) -> float:
        return sum(f.magnitude for f in self.flows if f.source == source)

    def inflow(self, target: str) -> float:
        return sum(f.magnitude for f in self.flows if f.target == target)

    def to_dict(self) -> dict:
        node = lambda n: {"id": n.id, "label": n.label, "rank": n.rank, "mass": n.mass, "terms": n.terms}
        return {
            **self.meta,
            "mode": self.mode,
            "mode_description": FLOW_MODES[self.mode],
            "left": [node(n) for n in self.left],
            "right": [node(n) for n in self.right],
            "flows": [{"source": f.source, "target": f.target, "magnitude": f.magnitude,
                       "shared_terms": f.shared_terms} for f in self.flows],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FlowDiagram":
        node = lambda n: FlowNode(n["id"], n["label"], n["rank"], n["mass"], list(n["terms"]))
        meta = {k: v for k, v in d.items()
                if k not in ("mode", "mode_description", "left", "right", "flows")}
        return cls([node(n) for n in d["left"]], [node(n) for n in d["right"]],
                   [Flow(f["source"], f["target"], f["magnitude"], list(f["shared_terms"]))
                    for f in d["flows"]], d["mode"], meta)


def compute_flows(narratives_t: Sequence[NarrativeTermSet], narratives_t1: Sequence[NarrativeTermSet],
                  counts_t: TermCounts, counts_t1: TermCounts, mode: str = "min_count") -> FlowDiagram:
    """Trace narrative terms from period T to period T+1.

    Each term belongs to one narrative per period (see :func:`term_owners`).
    A flow links the owners of a term in both periods. In ``min_count`` mode
    its magnitude adds ``min(count_T, count_T1)`` per shared term and a
    left node's mass is the period-T count of its terms; in ``shared_terms``
    mode every term counts 1.
    """
    if mode not in FLOW_MODES:
        raise ValueError(f"unknown flow mode {mode!r}")
    left_n, right_n = _ordered(narratives_t), _ordered(narratives_t1)
    own_l, own_r = term_owners(left_n), term_owners(right_n)

    def weight(term, counts):
        return 1.0 if mode == "shared_terms" else float(counts.count(term))

    def nodes(narrs, owners, counts):
        out = []
        for pos, n in enumerate(narrs):
            terms = [t for t in n.term_names if owners[t] == pos]
            out.append(FlowNode(n.id, n.label, pos, sum(weight(t, counts) for t in terms), terms))
        return out

    left = nodes(left_n, own_l, counts_t)
    right = nodes(right_n, own_r, counts_t1)
    shared: dict[tuple[int, int], list[str]] = {}
    for src in left:
        for term in src.terms:
            tgt = own_r.get(term)
            if tgt is not None:
                shared.setdefault((src.rank, tgt), []).append(term)
    flows = []
    for (s, t), terms in sorted(shared.items()):
        if mode == "shared_terms":
            mag = float(len(terms))
        else:
            mag = float(sum(min(counts_t.count(x), counts_t1.count(x)) for x in terms))
        if mag <= 0:
            continue
        flows.append(Flow(left[s].id, right[t].id, mag, sorted(terms)))
    return FlowDiagram(left, right, flows, mode)


@dataclass
class SankeyGeometry:
    width: float
    height: float
    scale: float
    nodes: list[dict]
    ribbons: list[dict]

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height, "scale": self.scale,
                "nodes": self.nodes, "ribbons": self.ribbons}

    @classmethod
    def from_dict(cls, d: dict) -> "SankeyGeometry":
        return cls(d["width"], d["height"], d["scale"], d["nodes"], d["ribbons"])


def sankey_geometry(diagram: FlowDiagram, height: float = 600.0, width: float = 800.0,
                    node_width: float = 18.0, gap: float = 8.0) -> SankeyGeometry:
    """Rectangles for both node columns and ribbons between them.

    One mass-to-pixel scale serves both columns so ribbons keep their
    thickness end to end. The most relevant node sits at the bottom of its
    column. Ribbons leave a source stacked bottom-up by target rank and enter
    a target stacked bottom-up by source rank.
    """
    cols = [diagram.left, diagram.right]
    avail = []
    for col in cols:
        free = height - gap * max(len(col) - 1, 0)
        if col and free <= 0:
            raise ValueError(f"canvas height {height} too small for {len(col)} nodes with gap {gap}")
        total = sum(n.mass for n in col)
        if total > 0:
            avail.append(free / total)
    scale = min(avail) if avail else 0.0

    nodes, where = [], {}
    for c, col in enumerate(cols):
        x = 0.0 if c == 0 else width - node_width
        bottom = height
        for n in col:
            h = n.mass * scale
            rect = {"id": n.id, "label": n.label, "column": "left" if c == 0 else "right",
                    "rank": n.rank, "mass": n.mass, "x": x, "y": bottom - h,
                    "width": node_width, "height": h}
            nodes.append(rect)
            where[(c, n.id)] = rect
            bottom -= h + gap

    rank_l = {n.id: n.rank for n in diagram.left}
    rank_r = {n.id: n.rank for n in diagram.right}
    out_cursor = {n.id: where[(0, n.id)]["y"] + where[(0, n.id)]["height"] for n in diagram.left}
    in_cursor = {n.id: where[(1, n.id)]["y"] + where[(1, n.id)]["height"] for n in diagram.right}
    y_src, y_tgt = {}, {}
    for f in sorted(diagram.flows, key=lambda f: (rank_l[f.source], rank_r[f.target])):
        out_cursor[f.source] -= f.magnitude * scale
        y_src[(f.source, f.target)] = out_cursor[f.source]
    for f in sorted(diagram.flows, key=lambda f: (rank_r[f.target], rank_l[f.source])):
        in_cursor[f.target] -= f.magnitude * scale
        y_tgt[(f.source, f.target)] = in_cursor[f.target]
    ribbons = [
        {"source": f.source, "target": f.target, "magnitude": f.magnitude,
         "thickness": f.magnitude * scale, "x0": node_width, "x1": width - node_width,
         "y0": y_src[(f.source, f.target)], "y1": y_tgt[(f.source, f.target)]}
        for f in sorted(diagram.flows, key=lambda f: (rank_l[f.source], rank_r[f.target]))
    ]
    return SankeyGeometry(width, height, scale, nodes, ribbons)


@dataclass
class Histogram:
    counts: list[int]
    edges: list[float]


@dataclass
class RegressionFit:
    slope: float
    intercept: float
    r: float
    r_squared: float
    x: np.ndarray
    y: np.ndarray
    hist_x: Histogram
    hist_y: Histogram
    degenerate: bool = False
    labels: list[str] = field(default_factory=list)

    def to_dict(self, **meta) -> dict:
        return {**meta, "slope": self.slope, "intercept": self.intercept, "r": self.r,
                "r_squared": self.r_squared, "degenerate": self.degenerate,
                "points": [{"label": lab, "x": float(a), "y": float(b)}
                           for lab, a, b in zip(self.labels or [""] * len(self.x), self.x, self.y)],
                "hist_x": {"counts": self.hist_x.counts, "edges": self.hist_x.edges},
                "hist_y": {"counts": self.hist_y.counts, "edges": self.hist_y.edges}}

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionFit":
        pts = d["points"]
        return cls(d["slope"], d["intercept"], d["r"], d["r_squared"],
                   np.array([p["x"] for p in pts], dtype=float),
                   np.array([p["y"] for p in pts], dtype=float),
                   Histogram(d["hist_x"]["counts"], d["hist_x"]["edges"]),
                   Histogram(d["hist_y"]["counts"], d["hist_y"]["edges"]),
                   d["degenerate"], [p["label"] for p in pts])


def _histogram(v: np.ndarray, bins: int) -> Histogram:
    counts, edges = np.histogram(v, bins=bins)
    return Histogram(counts.tolist(), edges.tolist())


def fit_regression(points, bins: int = 20, labels: Sequence[str] = ()) -> RegressionFit:
    """Ordinary least squares of y on x, plus marginal histograms.

    Constant ``y`` leaves the correlation undefined: ``r`` is reported as 0
    and ``degenerate`` is set.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("need at least two (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy, sxy = float(dx @ dx), float(dy @ dy), float(dx @ dy)
    if sxx == 0:
        raise ValueError("x has zero variance; regression slope undefined")
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    degenerate = syy == 0
    r = 0.0 if degenerate else sxy / math.sqrt(sxx * syy)
    return RegressionFit(slope, intercept, r, r * r, x.copy(), y.copy(),
                         _histogram(x, bins), _histogram(y, bins), degenerate, list(labels))


def frequency_points(terms: Sequence[str], counts_t: TermCounts, counts_t1: TermCounts,
                     transform: str | None = None) -> np.ndarray:
    """Per-term (frequency in T, frequency in T+1), per million tokens."""
    pts = np.array([[term_frequency(t, counts_t), term_frequency(t, counts_t1)] for t in terms],
                   dtype=float).reshape(len(terms), 2)
    if transform == "log1p":
        pts = np.log1p(pts)
    elif transform is not None:
        raise ValueError(f"unknown transform {transform!r}")
    return pts
