"""Instance generators: random ensembles and adversarial constructions.

Each adversarial generator returns ``(instance, invariants)`` where
``invariants`` is a dict of named checks recomputed through the ``conflict``
and ``sinr`` modules (never trusted from the construction itself).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conflict import b_measure, build, f_independent_set
from .funclib import SublinearFn, f_star, is_strongly_sublinear_probe, threshold_x0
from .metric import InstanceError, Link, LinkInstance, Metric, SinrParams, find_triangle_violation
from .sinr import exact_feasible, influence_on, influence_report, kesselheim_threshold

MAX_LENGTH = 1e300
MAX_HARD_LINKS = 2000


class LengthOverflowError(InstanceError):
    def __init__(self, msg: str, max_n: int):
        super().__init__(msg)
        self.max_n = max_n


def rng_for(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by a single 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & (2**64 - 1)))


# -- random ensembles ----------------------------------------------------------


def random_planar(n: int, delta_target: float, seed: int, alpha: float = 3.0, beta: float = 1.0,
                  side: float | None = None) -> LinkInstance:
    """Senders uniform in a square of side ``10 * delta_target`` (unless ``side``
    is given), log-uniform lengths in ``[1, delta_target]``, uniform direction."""
    if n < 1 or delta_target < 1:
        raise ValueError("need n >= 1 and delta_target >= 1")
    rng = rng_for(seed)
    side = 10.0 * delta_target if side is None else side
    senders = rng.uniform(0.0, side, size=(n, 2))
    if n == 1:
        lengths = np.ones(1)
    else:
        lengths = np.exp2(rng.uniform(0.0, math.log2(delta_target), size=n))
    theta = rng.uniform(0.0, 2 * math.pi, size=n)
    receivers = senders + lengths[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    links = tuple(Link(k, tuple(senders[k].tolist()), tuple(receivers[k].tolist())) for k in range(n))
    return LinkInstance(Metric.euclidean(2), links, SinrParams(alpha, beta))


def sample_independent(f: SublinearFn, n_target: int, delta: float, seed: int, side: float,
                       alpha: float = 3.0, beta: float = 1.0, max_candidates: int = 200_000,
                       batch: int = 256) -> LinkInstance:
    """Rejection-sample an ``f``-independent planar set.

    Candidate links (uniform senders in a ``side`` square, log-uniform lengths
    in ``[1, delta]``, uniform direction) are accepted one at a time when
    ``f``-independent of every link accepted so far.  Stops at ``n_target``
    links or after ``max_candidates`` proposals.
    """
    rng = rng_for(seed)
    S = np.zeros((0, 2))
    R = np.zeros((0, 2))
    L = np.zeros(0)
    tried = 0
    while len(L) < n_target and tried < max_candidates:
        cs = rng.uniform(0.0, side, size=(batch, 2))
        cl = np.exp2(rng.uniform(0.0, math.log2(delta), size=batch)) if delta > 1 else np.ones(batch)
        th = rng.uniform(0.0, 2 * math.pi, size=batch)
        cr = cs + cl[:, None] * np.column_stack([np.cos(th), np.sin(th)])
        for k in range(batch):
            tried += 1
            if len(L) and not _independent_of(cs[k], cr[k], cl[k], S, R, L, f):
                continue
            S = np.vstack([S, cs[k]])
            R = np.vstack([R, cr[k]])
            L = np.append(L, cl[k])
            if len(L) >= n_target or tried >= max_candidates:
                break
    links = tuple(Link(k, tuple(S[k].tolist()), tuple(R[k].tolist())) for k in range(len(L)))
    return LinkInstance(Metric.euclidean(2), links, SinrParams(alpha, beta))


def _independent_of(s, r, l, S, R, L, f) -> bool:
    def d(a, B):
        return np.sqrt(((B - a) ** 2).sum(-1))

    dist = np.minimum.reduce([d(s, R), d(r, S), d(s, S), d(r, R)])
    # the exact predicate is re-applied by the conflict module later
    lmin = np.minimum(L, l)
    lmax = np.maximum(L, l)
    return bool((dist > lmin * f.eval(lmax / lmin) * (1 + 1e-12)).all())


# -- chain construction -------------------------------------------------------------


def _line_instance(lengths, alpha, beta) -> LinkInstance:
    """Links laid left to right on the line with ``r_i = s_{i+1}``."""
    links = []
    x = 0.0
    for k, l in enumerate(lengths):
        links.append(Link(k, (x,), (x + l,)))
        x = x + l
    return LinkInstance(Metric.euclidean(1), tuple(links), SinrParams(alpha, beta))


def _min_satisfying(pred, lo: float, what: str, max_n: int) -> float:
    """Smallest float ``x >= lo`` with ``pred(x)``; ``pred`` must be monotone."""
    if pred(lo):
        return lo
    hi = lo
    while not pred(hi):
        hi *= 2.0
        if hi > MAX_LENGTH or math.isinf(hi):
            raise LengthOverflowError(f"{what}: next length exceeds {MAX_LENGTH:g}; max achievable n = {max_n}",
                                      max_n)
    a, b = hi / 2.0, hi
    while True:
        mid = a + (b - a) / 2.0
        if mid <= a or mid >= b:
            break
        if pred(mid):
            b = mid
        else:
            a = mid
    return b


def chain_clique(n: int, f: SublinearFn, alpha: float = 3.0, beta: float = 1.0):
    """Feasible-looking chain of links on the line whose ``G_f`` is complete.

    ``l_1 = 1``; each next length is the least value with ``l_{i+1} >= 2 l_i``
    and ``2 d(i+1, j) <= l_j f(l_{i+1} / l_j)`` for every earlier ``j``.  The
    constraints are evaluated on the actual float coordinates.
    """
    if f.family == "constant":
        raise ValueError("chain_clique needs an unbounded f; the constant family never satisfies it")
    if n < 1:
        raise ValueError("n must be >= 1")
    lengths = [1.0]
    for i in range(1, n):
        prev = lengths[:]
        # right endpoint of the chain so far and the left end of each earlier link's receiver
        gaps = _gaps(prev)

        end = float(np.sum(prev))

        def ok(x, prev=prev, gaps=gaps, end=end):
            x = (end + x) - end  # the length the float layout will actually realize
            if x < 2 * prev[-1]:
                return False
            lj = np.asarray(prev)
            return bool((2 * gaps <= lj * f.eval(np.maximum(x / lj, 1.0))).all())

        lengths.append(_min_satisfying(ok, 2 * prev[-1], "chain_clique", max_n=i))
    inst = _line_instance(lengths, alpha, beta)
    return inst, chain_invariants(inst, f)


def _gaps(lengths) -> np.ndarray:
    """Distance from the receiver of each link to the right end of the chain."""
    x = np.concatenate([[0.0], np.cumsum(lengths)])
    total = x[-1]
    return np.array([total - x[j + 1] for j in range(len(lengths))])


def chain_clique_strong(n: int, g: SublinearFn, c_override: float | None = None,
                        alpha: float = 3.0, beta: float = 1.0):
    """Chain with ``l_{i+1} > max(c, x0)`` minimal such that ``g(l_{i+1}) >= 2 l_i``.

    ``c`` is the strong sub-linearity constant for factor 2 (probed
    numerically unless ``c_override`` is given).
    """
    if g.family == "constant":
        raise ValueError("chain_clique_strong needs an unbounded g")
    if c_override is None:
        kind, c = is_strongly_sublinear_probe(g, 2.0)
        if kind != "witness":
            raise ValueError("g failed the strong sub-linearity probe")
    else:
        c = float(c_override)
    x0 = threshold_x0(g)
    floor = max(c, x0)
    lengths = [1.0]
    for i in range(1, n):
        target = 2 * lengths[-1]
        start = np.nextafter(floor, math.inf)
        lengths.append(_min_satisfying(lambda x: g(x) >= target, start, "chain_clique_strong", max_n=i))
    inst = _line_instance(lengths, alpha, beta)
    inv = chain_invariants(inst, g)
    inv["c"] = c
    inv["x0"] = x0
    inv["g_star_delta"] = f_star(g, inst.delta())
    inv["n_vs_g_star"] = n >= inv["g_star_delta"] - 3
    return inst, inv


def chain_invariants(inst: LinkInstance, f: SublinearFn) -> dict:
    graph = build(inst, f)
    lengths = inst.lengths
    doubling = bool(all(lengths[k + 1] >= 2 * lengths[k] for k in range(inst.n - 1)))
    odd = list(range(0, inst.n, 2))  # links 1, 3, 5, ... in one-based numbering
    rep = influence_report(inst, odd)
    return {
        "n": inst.n,
        "pairs_adjacent": graph.n_edges(),
        "pairs_total": inst.n * (inst.n - 1) // 2,
        "clique": graph.is_complete(),
        "doubling_lengths": doubling,
        "odd_subchain_max_influence": rep.aggregate,
        "odd_subchain_influence_le_1": bool(rep.aggregate <= 1.0),
        "delta": inst.delta(),
    }


# -- recursive hard instance ---------------------------------------------------------


@dataclass
class _LineSet:
    """Links on the line with exact integer coordinates (sender left of receiver)."""

    segments: list  # (left, right) ints

    @property
    def lo(self) -> int:
        return min(a for a, _ in self.segments)

    @property
    def hi(self) -> int:
        return max(b for _, b in self.segments)

    @property
    def diam(self) -> int:
        return self.hi - self.lo

    def placed(self, scale: int, offset: int) -> list:
        lo = self.lo
        return [(offset + (a - lo) * scale, offset + (b - lo) * scale) for a, b in self.segments]


def hard_instance(t: int, f: SublinearFn | None = None, mode: str = "scaled", k_cap: int = 64,
                  c_override: float | None = None, C: float = 1.0, alpha: float = 3.0, beta: float = 1.0,
                  c0: float | None = None, n_transversals: int = 100, seed: int = 0):
    """Recursive ``f``-independent instance on the line needing many slots.

    ``L_1`` is one unit link.  ``L_{t+1}`` is a long link ``j`` of length
    ``8^(k+1) * diam(L_t)`` followed by copies ``s = 1..k`` of ``L_t`` scaled
    by ``8^s``, copy ``s`` placed at distance ``2 D_s g(l_j / D_s)`` from
    ``j`` where ``D_s`` is its diameter and ``g(x) = C log2(x)^(1/alpha)``.
    ``k = 2^(c * diam(L_t))`` in faithful mode; scaled mode caps ``k`` at
    ``k_cap``.  Coordinates are exact integers (placement distances rounded
    up) and the instance is emitted as a matrix metric so that links at
    wildly different scales keep exact lengths.
    """
    f = SublinearFn.constant(1.0) if f is None else f
    if t < 1:
        raise ValueError("t must be >= 1")
    if mode not in ("faithful", "scaled"):
        raise ValueError("mode is 'faithful' or 'scaled'")
    c = 1.0 if c_override is None else float(c_override)
    c0 = 1.0 / kesselheim_threshold(alpha, beta) if c0 is None else c0

    def g(x: float) -> float:
        return C * math.log2(x) ** (1.0 / alpha)

    cur = _LineSet([(0, 1)])
    ks = []
    size = 1
    for _ in range(1, t):
        diam = cur.diam
        k_true_exp = c * diam
        if mode == "faithful":
            if k_true_exp > 40:
                raise InstanceError(f"faithful hard_instance needs 2^{k_true_exp:.3g} copies; use scaled mode")
            k = int(2 ** k_true_exp)
        else:
            k = int(min(k_cap, 2 ** min(k_true_exp, 62)))
        k = max(k, 1)
        size = 1 + k * size
        if size > MAX_HARD_LINKS:
            raise InstanceError(f"hard_instance would have {size} links (limit {MAX_HARD_LINKS})")
        ks.append(k)
        lj = 8 ** (k + 1) * diam
        segs = [(0, lj)]
        for s in range(1, k + 1):
            ds = 8**s * diam
            gap = math.ceil(2 * ds * g(lj / ds))
            # copies are laid out left to right; also keep copies from overlapping
            left = max(lj + gap, segs[-1][1] + 1)
            segs.extend(cur.placed(8**s, left))
        cur = _LineSet(segs)
    inst = _line_matrix_instance(cur.segments, alpha, beta)
    inv = hard_invariants(inst, f, ks, mode, k_cap, c0, n_transversals, seed)
    return inst, inv


def _line_matrix_instance(segments, alpha, beta) -> LinkInstance:
    xs = []
    for a, b in segments:
        xs.extend([a, b])
    n = len(xs)
    D = np.empty((n, n))
    for u in range(n):
        D[u] = [float(abs(xs[u] - xv)) for xv in xs]
    metric = Metric.from_matrix(D, doubling_dim=1.0, validate=n <= 400)
    links = tuple(Link(k, 2 * k, 2 * k + 1) for k in range(len(segments)))
    return LinkInstance(metric, links, SinrParams(alpha, beta))


def hard_invariants(inst, f, ks, mode, k_cap, c0, n_transversals, seed) -> dict:
    inv = {
        "n": inst.n,
        "copies_per_level": ks,
        "mode": mode,
        "f_independent": f_independent_set(inst, f),
        "delta": inst.delta(),
    }
    if not ks:
        inv["transversal_min_influence"] = None
        inv["transversal_exceeds_c0"] = None
        inv["fidelity"] = {"independence": "exact", "transversal_influence": "trivial (single link)"}
        return inv
    # top level: link 0 is j_{t+1}; the rest split evenly into k copies
    k = ks[-1]
    per_copy = (inst.n - 1) // k
    copies = [list(range(1 + s * per_copy, 1 + (s + 1) * per_copy)) for s in range(k)]
    rng = rng_for(seed)
    sums = []
    for _ in range(n_transversals):
        S = [int(rng.choice(cp)) for cp in copies]
        sums.append(influence_on(inst, S, 0))
    inv["c0"] = c0
    inv["transversal_min_influence"] = float(min(sums))
    inv["transversal_exceeds_c0"] = bool(min(sums) > c0)
    weakened = mode == "scaled" and any(kk >= k_cap for kk in ks)
    inv["fidelity"] = {
        "independence": "exact",
        "transversal_influence": "weakened (k capped)" if weakened else "faithful",
    }
    return inv


# -- unit links in a general metric ---------------------------------------------------


def unit_metric_clique(n: int, f: SublinearFn, alpha: float = 3.0, beta: float = 1.0,
                       doubling_dim: float = 1.0):
    """``n`` unit links in a metric where every pair sits just beyond ``f(1)``.

    ``d(s_i, s_j) = 2 f(1)``, ``d(s_i, r_j) = 2 f(1) + 1``, ``d(r_i, r_j) = 2 f(1) + 2``.
    Nodes ``2i`` and ``2i + 1`` are the sender and receiver of link ``i``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    f1 = f(1.0)
    N = 2 * n
    D = np.empty((N, N))
    is_s = np.arange(N) % 2 == 0
    D[np.ix_(is_s, is_s)] = 2 * f1
    D[np.ix_(~is_s, ~is_s)] = 2 * f1 + 2
    D[np.ix_(is_s, ~is_s)] = 2 * f1 + 1
    D[np.ix_(~is_s, is_s)] = 2 * f1 + 1
    for i in range(n):
        D[2 * i, 2 * i + 1] = D[2 * i + 1, 2 * i] = 1.0
    np.fill_diagonal(D, 0.0)
    metric = Metric.from_matrix(D, doubling_dim=doubling_dim, validate=False)
    links = tuple(Link(i, 2 * i, 2 * i + 1) for i in range(n))
    inst = LinkInstance(metric, links, SinrParams(alpha, beta))
    return inst, unit_metric_invariants(inst, f)


def unit_metric_bound(f: SublinearFn, beta: float) -> float:
    """Subset size beyond which the squared-ratio bound claims infeasibility."""
    return ((2 * f(1.0) + 1) / beta) ** 2 + 1


def unit_metric_invariants(inst: LinkInstance, f: SublinearFn, n_samples: int = 20, seed: int = 0) -> dict:
    i, _, _ = find_triangle_violation(inst.metric.matrix)
    graph = build(inst, f)
    bound = unit_metric_bound(f, inst.beta)
    size = math.floor(bound) + 1
    rng = rng_for(seed)
    checked = []
    if size <= inst.n:
        for _ in range(n_samples):
            S = sorted(rng.choice(inst.n, size=size, replace=False).tolist())
            checked.append(not exact_feasible(inst, S).feasible)
    return {
        "metric_valid": i is None,
        "edgeless": graph.n_edges() == 0,
        "bound": bound,
        "sampled_size": size,
        "sampled_all_infeasible": all(checked) if checked else None,
        "b_measure": b_measure(inst, f),
    }
