"""Coloring and weighted independent set on conflict graphs.

The heuristics use the increasing-length elimination order of the links;
the exact routines are bitmask searches meant as test oracles for small
graphs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conflict import ConflictGraph

MAX_EXACT_WIS = 24
MAX_EXACT_CHROMATIC = 16


@dataclass
class Coloring:
    color: dict  # link position -> color
    colors_used: int

    def classes(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.colors_used)]
        for v, c in self.color.items():
            out[c].append(v)
        return [sorted(c) for c in out]

    def is_proper(self, adj: np.ndarray) -> bool:
        return all(self.color[u] != self.color[v] for u, v in zip(*np.nonzero(np.triu(adj, 1))))

    def to_json(self, ids) -> dict:
        return {"colors": {str(int(ids[v])): c for v, c in sorted(self.color.items())},
                "colors_used": self.colors_used}


@dataclass
class WisSolution:
    chosen: list
    total_weight: float
    verdict: object = None  # optional exact-feasibility cross-check

    def is_independent(self, adj: np.ndarray) -> bool:
        idx = list(self.chosen)
        return not adj[np.ix_(idx, idx)].any()

    def to_json(self, ids) -> dict:
        out = {"chosen": sorted(int(ids[v]) for v in self.chosen), "weight": self.total_weight}
        if self.verdict is not None:
            out["verdict"] = self.verdict.to_json(ids)
        return out


def greedy_color(g: ConflictGraph) -> Coloring:
    """Color in decreasing length order with the smallest free color.

    When a vertex is reached, its colored neighbors are exactly its
    post-neighbors, so at most ``max post-degree + 1`` colors are used.
    """
    color: dict = {}
    for v in g.order[::-1]:
        v = int(v)
        taken = {color[u] for u in g.post_neighbors(v)}
        c = 0
        while c in taken:
            c += 1
        color[v] = c
    return Coloring(color, (max(color.values()) + 1) if color else 0)


def _weights_array(g: ConflictGraph, weights) -> np.ndarray:
    if weights is None:
        w = g.instance.weights.copy()
    elif isinstance(weights, dict):
        w = np.array([weights[i] for i in range(g.n)], dtype=float)
    else:
        w = np.asarray(weights, dtype=float).copy()
    if len(w) != g.n:
        raise ValueError("one weight per link is required")
    if (w <= 0).any():
        raise ValueError("weights must be positive")
    return w


def local_ratio_wis(g: ConflictGraph, weights=None) -> WisSolution:
    """Local-ratio weighted independent set along the increasing-length order.

    Forward pass: each vertex with positive residual weight is pushed and its
    residual is subtracted from itself and its post-neighbors.  Backward pass:
    pop and keep a vertex unless a neighbor was already kept.  If every
    post-neighborhood is covered by ``k`` cliques the result is within a
    factor ``k`` of optimal.
    """
    w = _weights_array(g, weights)
    residual = w.copy()
    stack = []
    for v in g.order:
        v = int(v)
        r = residual[v]
        if r > 0:
            stack.append(v)
            residual[v] = 0.0
            post = g.post_neighbors(v)
            residual[post] -= r
    chosen: list[int] = []
    blocked = np.zeros(g.n, dtype=bool)
    while stack:
        v = stack.pop()
        if not blocked[v]:
            chosen.append(v)
            blocked |= g.adj[v]
    chosen.sort()
    return WisSolution(chosen, float(w[chosen].sum()))


def _masks(adj: np.ndarray) -> list[int]:
    n = adj.shape[0]
    return [sum(1 << j for j in range(n) if adj[i, j]) for i in range(n)]


def exact_wis(g: ConflictGraph, weights=None) -> WisSolution:
    """Exact maximum-weight independent set by branch and bound (n <= 24)."""
    if g.n > MAX_EXACT_WIS:
        raise ValueError(f"exact_wis is limited to {MAX_EXACT_WIS} vertices")
    w = _weights_array(g, weights)
    nbr = _masks(np.asarray(g.adj))
    # branch on heavy vertices first so the bound bites early
    by_weight = sorted(range(g.n), key=lambda v: -w[v])
    best = [0.0, 0]

    def remaining_weight(avail: int) -> float:
        s = 0.0
        while avail:
            low = avail & -avail
            s += w[low.bit_length() - 1]
            avail ^= low
        return s

    def rec(avail: int, cur: float, chosen: int):
        if cur > best[0]:
            best[0], best[1] = cur, chosen
        if not avail or cur + remaining_weight(avail) <= best[0]:
            return
        v = next(u for u in by_weight if avail >> u & 1)
        rec(avail & ~nbr[v] & ~(1 << v), cur + w[v], chosen | (1 << v))
        rec(avail & ~(1 << v), cur, chosen)

    rec((1 << g.n) - 1, 0.0, 0)
    chosen = [v for v in range(g.n) if best[1] >> v & 1]
    return WisSolution(chosen, float(w[chosen].sum()) if chosen else 0.0)


def exact_chromatic(g: ConflictGraph) -> int:
    """Exact chromatic number by DSATUR-style backtracking (n <= 16)."""
    n = g.n
    if n > MAX_EXACT_CHROMATIC:
        raise ValueError(f"exact_chromatic is limited to {MAX_EXACT_CHROMATIC} vertices")
    if n == 0:
        return 0
    adj = np.asarray(g.adj)
    nbrs = [np.nonzero(adj[v])[0].tolist() for v in range(n)]
    upper = greedy_color(g).colors_used
    best = [upper]
    color = [-1] * n

    def pick() -> int:
        best_v, best_key = -1, None
        for v in range(n):
            if color[v] >= 0:
                continue
            sat = len({color[u] for u in nbrs[v] if color[u] >= 0})
            key = (sat, len(nbrs[v]))
            if best_key is None or key > best_key:
                best_v, best_key = v, key
        return best_v

    def rec(colored: int, used: int):
        if used >= best[0]:
            return
        if colored == n:
            best[0] = used
            return
        v = pick()
        forbidden = {color[u] for u in nbrs[v]}
        for c in range(min(used + 1, best[0] - 1)):
            if c in forbidden:
                continue
            color[v] = c
            rec(colored + 1, max(used, c + 1))
            color[v] = -1

    rec(0, 0)
    return best[0]
