"""Conflict graphs G_f(L) built from the f-adjacency predicate."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .funclib import SublinearFn
from .metric import InstanceError, LinkInstance

SECTOR_FAMILIES = ("constant", "tlog", "log", "power")


def adjacency_threshold(instance: LinkInstance, f: SublinearFn, rows=None, cols=None) -> np.ndarray:
    """``l_min * f(l_max / l_min)`` for every pair of the given rows/cols."""
    lengths = instance.lengths
    li = lengths if rows is None else lengths[rows]
    lj = lengths if cols is None else lengths[cols]
    lmin = np.minimum(li[:, None], lj[None, :])
    lmax = np.maximum(li[:, None], lj[None, :])
    return lmin * f.eval(lmax / lmin)


def f_adjacent(instance: LinkInstance, f: SublinearFn, i: int, j: int) -> bool:
    """True iff ``d(i, j) <= l_min * f(l_max / l_min)``; strict ``>`` means independent."""
    if i == j:
        raise ValueError("f-adjacency is defined for distinct links")
    thr = adjacency_threshold(instance, f, [i], [j])[0, 0]
    return bool(instance.link_dist_matrix[i, j] <= thr)


def f_independent_set(instance: LinkInstance, f: SublinearFn, idx=None) -> bool:
    idx = np.arange(instance.n) if idx is None else np.asarray(idx, int)
    if len(idx) < 2:
        return True
    d = instance.link_dist_matrix[np.ix_(idx, idx)]
    adj = d <= adjacency_threshold(instance, f, idx, idx)
    np.fill_diagonal(adj, False)
    return not adj.any()


@dataclass(frozen=True, eq=False)
class ConflictGraph:
    instance: LinkInstance
    f: SublinearFn
    adj: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def order(self) -> np.ndarray:
        return self.instance.order

    @property
    def rank(self) -> np.ndarray:
        return self.instance.rank

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adj[i, j])

    def neighbors(self, i: int) -> np.ndarray:
        return np.nonzero(self.adj[i])[0]

    @cached_property
    def _post(self) -> list:
        rank = self.rank
        return [np.array([j for j in np.nonzero(self.adj[i])[0] if rank[j] > rank[i]], dtype=int)
                for i in range(self.n)]

    def post_neighbors(self, i: int) -> np.ndarray:
        """Adjacent links that are longer than ``i`` under the tie-broken order."""
        return self._post[i]

    def post_degrees(self) -> np.ndarray:
        return np.array([len(p) for p in self._post], dtype=int)

    def max_post_degree(self) -> int:
        return int(self.post_degrees().max()) if self.n else 0

    def edges(self) -> list[tuple[int, int]]:
        iu, ju = np.nonzero(np.triu(self.adj, 1))
        return list(zip(iu.tolist(), ju.tolist()))

    def n_edges(self) -> int:
        return int(np.triu(self.adj, 1).sum())

    def is_complete(self) -> bool:
        return self.n_edges() == self.n * (self.n - 1) // 2

    def induced(self, idx) -> "ConflictGraph":
        idx = list(idx)
        sub = self.instance.subset(idx)
        return ConflictGraph(sub, self.f, self.adj[np.ix_(idx, idx)].copy())

    def export_edgelist(self) -> str:
        """JSON header line followed by ``u v`` link-id pairs, one per line."""
        ids = self.instance.ids
        header = {"f": self.f.to_json(), "vertex_order": ids[self.order].tolist(), "n": self.n}
        lines = [json.dumps(header, sort_keys=True)]
        lines += [f"{ids[u]} {ids[v]}" for u, v in self.edges()]
        return "\n".join(lines) + "\n"


def build(instance: LinkInstance, f: SublinearFn) -> ConflictGraph:
    """Classify every pair of links; the adjacency matrix is symmetric by construction."""
    n = instance.n
    if n == 0:
        return ConflictGraph(instance, f, np.zeros((0, 0), dtype=bool))
    d = instance.link_dist_matrix
    if _nondecreasing(f):
        # f(l_max / l_min) <= f(Delta), so only pairs under that cap need f evaluated
        lengths = instance.lengths
        lmin = np.minimum(lengths[:, None], lengths[None, :])
        lmax = np.maximum(lengths[:, None], lengths[None, :])
        cand = d <= lmin * f.eval(float(lengths.max() / lengths.min()))
        adj = np.zeros((n, n), dtype=bool)
        adj[cand] = d[cand] <= lmin[cand] * f.eval(lmax[cand] / lmin[cand])
    else:
        adj = d <= adjacency_threshold(instance, f)
    np.fill_diagonal(adj, False)
    adj.setflags(write=False)
    return ConflictGraph(instance, f, adj)


def _nondecreasing(f: SublinearFn) -> bool:
    if f.family == "tlog":
        return f.tlog_exponent > 0
    if f.family == "power":
        return f.exponent >= 0
    return True


def b_measure(instance: LinkInstance, f: SublinearFn, idx=None) -> int:
    """``max_i |{j : l_j >= l_i, d(i, j) <= l_i f(l_j / l_i)}|`` (``i`` counts itself)."""
    idx = np.arange(instance.n) if idx is None else np.asarray(idx, int)
    if len(idx) == 0:
        raise InstanceError("B-measure of an empty link set")
    lengths = instance.lengths[idx]
    li = lengths[:, None]
    lj = lengths[None, :]
    longer = lj >= li
    ratio = np.where(longer, lj / li, 1.0)
    # rows are i, columns j; lmin = l_i whenever l_j >= l_i
    close = instance.link_dist_matrix[np.ix_(idx, idx)] <= li * f.eval(ratio)
    return int((longer & close).sum(axis=1).max())


# -- planar sector clique cover ----------------------------------------------


@dataclass
class SectorCover:
    link: int
    cells: dict  # (side, sector) -> list of link positions, increasing length
    violations: list  # (j, k, side, sector) pairs within a cell that are not adjacent
    ratio_nonincreasing: bool = True  # f(x)/x non-increasing on a probe grid

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def n_cliques(self) -> int:
        return len(self.cells)


@lru_cache(maxsize=64)
def ratio_nonincreasing(f: SublinearFn, max_exp: int = 64, steps_per_octave: int = 64) -> bool:
    """Probe whether ``f(x) / x`` is non-increasing on ``[1, 2^max_exp]``.

    The sector argument needs this; the clamped logarithmic families violate
    it slightly just above ``x = 2`` (``log2(x)^e / x`` grows until
    ``log2 x = e / ln 2``).
    """
    xs = 2.0 ** (np.arange(max_exp * steps_per_octave + 1) / steps_per_octave)
    r = f.eval(xs) / xs
    return bool((np.diff(r) <= 1e-15 * r[:-1]).all())


def _check_sector_precondition(instance: LinkInstance, f: SublinearFn) -> None:
    if instance.metric.kind != "euclidean" or instance.metric.dim != 2:
        raise InstanceError("sector clique cover needs a planar euclidean instance")
    if f.family not in SECTOR_FAMILIES:
        raise ValueError(f"f family {f.family!r} does not satisfy the sector-cover precondition")


def sector_clique_cover_check(graph: ConflictGraph, i: int) -> SectorCover:
    """Cover the longer neighbors of ``i`` by at most 12 sector cells and check each is a clique.

    Each longer neighbor ``j`` is assigned to the endpoint of ``i`` (sender or
    receiver) realizing ``d(i, j)``, ties going to the sender, and then to one
    of six 60-degree sectors around that endpoint by the angle of the endpoint
    of ``j`` nearest to it.
    """
    inst = graph.instance
    _check_sector_precondition(inst, graph.f)
    post = graph.post_neighbors(i)
    cells: dict = {}
    exact_pre = ratio_nonincreasing(graph.f)
    if len(post) == 0:
        return SectorCover(i, cells, [], exact_pre)
    si = np.asarray(inst.links[i].sender, float)
    ri = np.asarray(inst.links[i].receiver, float)
    S = np.array([inst.links[j].sender for j in post], float)
    R = np.array([inst.links[j].receiver for j in post], float)

    def near(center):
        ds = np.sqrt(((S - center) ** 2).sum(-1))
        dr = np.sqrt(((R - center) ** 2).sum(-1))
        use_s = ds <= dr
        return np.where(use_s, ds, dr), np.where(use_s[:, None], S, R)

    d_s, p_s = near(si)
    d_r, p_r = near(ri)
    sender_side = d_s <= d_r
    for side, mask, center, pts in (("s", sender_side, si, p_s), ("r", ~sender_side, ri, p_r)):
        if not mask.any():
            continue
        v = pts[mask] - center
        ang = np.mod(np.arctan2(v[:, 1], v[:, 0]), 2 * math.pi)
        sector = np.minimum((ang // (math.pi / 3)).astype(int), 5)
        for j, sec in zip(post[mask], sector):
            cells.setdefault((side, int(sec)), []).append(int(j))
    violations = []
    rank = graph.rank
    for key, members in cells.items():
        members.sort(key=lambda j: rank[j])
        sub = graph.adj[np.ix_(members, members)]
        bad = ~sub
        np.fill_diagonal(bad, False)
        for a, b in np.argwhere(np.triu(bad, 1)):
            violations.append((members[a], members[b], key[0], key[1]))
    return SectorCover(i, cells, violations, exact_pre)


def sector_violations(graph: ConflictGraph) -> list:
    out = []
    for i in range(graph.n):
        out.extend(sector_clique_cover_check(graph, i).violations)
    return out
