"""Force-directed node placement.

Graphs are passed as a node count plus an edge list of ``(i, j)`` or
``(i, j, weight)`` tuples; positions come back as an ``(n, 2)`` array.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata


class LayoutError(FloatingPointError):
    pass


@dataclass(frozen=True)
class VerletConfig:
    stiffness: float = 1.0
    rest_length: float = 30.0
    repulsion: float = -30.0
    centering: float = 0.05
    velocity_decay: float = 0.6
    steps: int = 300
    min_distance: float = 1.0
    dt: float = 1.0
    early_exaggeration: float = 15.0
    early_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.velocity_decay <= 1:
            raise ValueError("velocity_decay must lie in (0, 1]")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


@dataclass(frozen=True)
class FrConfig:
    side: float = 1.0
    c: float = 1.0
    iterations: int = 500
    initial_temperature: float | None = None  # None means 0.1 * side
    seed: int = 0

    def __post_init__(self):
        if self.side <= 0:
            raise ValueError("frame side must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    def ideal_distance(self, n: int) -> float:
        return self.c * math.sqrt(self.side * self.side / max(n, 1))


def _edge_array(edges) -> np.ndarray:
    if len(edges) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    return np.array([(e[0], e[1]) for e in edges], dtype=np.int64)


def phyllotaxis(n: int, radius: float = 10.0) -> np.ndarray:
    """Deterministic sunflower-spiral seed placement."""
    i = np.arange(n, dtype=float)
    r = radius * np.sqrt(0.5 + i)
    a = i * math.pi * (3 - math.sqrt(5))
    return np.column_stack([r * np.cos(a), r * np.sin(a)])


def _verlet_forces(pos, links, link_strength, bias, cfg: VerletConfig, boost: float = 1.0) -> np.ndarray:
    force = -cfg.centering * pos
    if len(pos) > 1:
        delta = pos[:, None, :] - pos[None, :, :]
        dist2 = np.maximum((delta ** 2).sum(-1), cfg.min_distance ** 2)
        np.fill_diagonal(dist2, np.inf)
        # many-body: magnitude |strength| / d, pushing apart for negative strength
        force -= boost * cfg.repulsion * (delta / dist2[..., None]).sum(axis=1)
    if len(links):
        i, j = links[:, 0], links[:, 1]
        vec = pos[j] - pos[i]
        dist = np.maximum(np.linalg.norm(vec, axis=1), 1e-9)
        mag = link_strength * (dist - cfg.rest_length) / dist
        f = vec * mag[:, None]
        np.add.at(force, i, f * (1 - bias)[:, None])
        np.add.at(force, j, -f * bias[:, None])
    return force


def verlet_layout(n: int, edges: Sequence, config: VerletConfig | None = None) -> np.ndarray:
    """Spring/charge simulation integrated with damped velocity Verlet.

    Springs pull linked nodes toward ``rest_length`` with stiffness divided
    by the smaller endpoint degree. Each spring's pull is shared between its
    endpoints in proportion to the other endpoint's degree, so hubs move less
    than leaves and the summed stiffness on any node stays at most
    ``stiffness``, which keeps the unit-step integrator stable. Every pair repels with magnitude
    ``|repulsion| / d``; a linear pull toward the origin keeps the drawing
    centred. Velocities are scaled by ``1 - velocity_decay`` after each step.

    Repulsion starts ``early_exaggeration`` times stronger and decays
    linearly to its nominal value over the first ``early_fraction`` of the
    steps, so tangled seed placements can open up before the springs settle.
    The remaining steps integrate the nominal forces only.
    """
    cfg = config or VerletConfig()
    if n < 1:
        raise ValueError("layout needs at least one node")
    links = _edge_array(edges)
    deg = np.bincount(links.ravel(), minlength=n) if len(links) else np.zeros(n)
    link_strength = (cfg.stiffness / np.minimum(deg[links[:, 0]], deg[links[:, 1]])
                     if len(links) else np.zeros(0))
    # share of each spring's pull taken by the second endpoint
    bias = (deg[links[:, 0]] / (deg[links[:, 0]] + deg[links[:, 1]]) if len(links) else np.zeros(0))
    pos = phyllotaxis(n)
    vel = np.zeros_like(pos)
    early = int(cfg.early_fraction * cfg.steps)

    def boost(step):
        if step >= early:
            return 1.0
        return 1.0 + (cfg.early_exaggeration - 1.0) * (1 - step / early)

    acc = _verlet_forces(pos, links, link_strength, bias, cfg, boost(0))
    dt = cfg.dt
    keep = 1.0 - cfg.velocity_decay
    for step in range(cfg.steps):
        pos = pos + vel * dt + 0.5 * acc * dt * dt
        new_acc = _verlet_forces(pos, links, link_strength, bias, cfg, boost(step + 1))
        vel = (vel + 0.5 * (acc + new_acc) * dt) * keep
        acc = new_acc
        if not np.isfinite(pos).all():
            raise LayoutError(f"non-finite coordinate at step {step}")
    return pos


@dataclass
class FrTrace:
    max_displacement: list[float]


def fruchterman_reingold(n: int, edges: Sequence, config: FrConfig | None = None,
                         trace: FrTrace | None = None) -> np.ndarray:
    """Classical Fruchterman-Reingold inside a ``side`` x ``side`` frame centred at 0.

    Repulsion ``k^2/d`` between all pairs, attraction ``d^2/k`` along edges,
    per-node displacement capped by a temperature that cools linearly from
    ``initial_temperature`` to 0. Positions are clamped to the frame.

    Over the final quarter the temperature is additionally quenched to the
    largest displacement of the previous iteration, so step sizes only shrink
    while the layout settles.
    """
    cfg = config or FrConfig()
    if n < 1:
        raise ValueError("layout needs at least one node")
    half = cfg.side / 2
    rng = np.random.default_rng(cfg.seed)
    pos = rng.uniform(-half, half, size=(n, 2))
    links = _edge_array(edges)
    k = cfg.ideal_distance(n)
    t0 = 0.1 * cfg.side if cfg.initial_temperature is None else cfg.initial_temperature
    quench_from = cfg.iterations - cfg.iterations // 4
    last = math.inf
    for it in range(cfg.iterations):
        temp = t0 * (1 - it / cfg.iterations)
        if it >= quench_from:
            temp = min(temp, last)
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((delta ** 2).sum(-1))
        np.fill_diagonal(dist, np.inf)
        dist = np.maximum(dist, 1e-9)
        disp = (delta * (k * k / dist ** 2)[..., None]).sum(axis=1)
        if len(links):
            i, j = links[:, 0], links[:, 1]
            vec = pos[i] - pos[j]
            d = np.maximum(np.linalg.norm(vec, axis=1), 1e-9)
            f = vec * (d / k)[:, None]  # unit(vec) * d^2 / k
            np.add.at(disp, i, -f)
            np.add.at(disp, j, f)
        length = np.linalg.norm(disp, axis=1)
        scale = np.where(length > 0, np.minimum(length, temp) / np.maximum(length, 1e-300), 0.0)
        step = disp * scale[:, None]
        last = float(np.minimum(length, temp).max())
        if trace is not None:
            trace.max_displacement.append(last)
        pos = np.clip(pos + step, -half, half)
        if not np.isfinite(pos).all():
            raise LayoutError(f"non-finite coordinate at iteration {it}")
    return pos


def radialize(positions: np.ndarray, strength: Sequence[float],
              inner: float = 0.05, outer: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    """Remap radii by node strength, keeping each node's angle.

    The strongest node gets the smallest radius; radii run linearly in rank
    from ``inner`` to ``outer`` inside the unit disk, and tied strengths share
    their average rank. A lone node sits at the centre.

    Returns ``(positions, rank)`` where ``rank`` is 1 for the strongest node.
    """
    positions = np.asarray(positions, dtype=float)
    strength = np.asarray(strength, dtype=float)
    n = len(positions)
    if n == 0:
        return positions.copy(), np.zeros(0)
    rank = rankdata(-strength, method="average")
    if n == 1:
        return np.zeros((1, 2)), rank
    centred = positions - positions.mean(axis=0)
    angle = np.arctan2(centred[:, 1], centred[:, 0])
    radius = inner + (outer - inner) * (rank - 1) / (n - 1)
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]), rank
