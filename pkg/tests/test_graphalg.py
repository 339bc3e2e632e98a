import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sinrc.conflict import ConflictGraph, b_measure, build
from sinrc.funclib import SublinearFn
from sinrc.generators import random_planar
from sinrc.graphalg import exact_chromatic, exact_wis, greedy_color, local_ratio_wis
from sinrc.metric import euclidean_instance


def graph_from_adj(adj):
    n = adj.shape[0]
    inst = euclidean_instance([((10.0 * k, 0.0), (10.0 * k + 1 + k * 1e-3, 0.0)) for k in range(n)])
    return ConflictGraph(inst, SublinearFn.constant(1), adj)


def random_adj(rng, n, p):
    a = rng.random((n, n)) < p
    a = np.triu(a, 1)
    return a | a.T


def brute_chromatic(adj):
    n = adj.shape[0]
    if n == 0:
        return 0
    edges = list(zip(*np.nonzero(np.triu(adj, 1))))
    for k in range(1, n + 1):
        for col in itertools.product(range(k), repeat=n):
            if all(col[u] != col[v] for u, v in edges):
                return k


def brute_wis(adj, w):
    n = adj.shape[0]
    best = 0.0
    for mask in range(1 << n):
        idx = [k for k in range(n) if mask >> k & 1]
        if not adj[np.ix_(idx, idx)].any():
            best = max(best, float(sum(w[k] for k in idx)))
    return best


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 7), st.floats(0.1, 0.9))
def test_exact_chromatic_matches_enumeration(seed, n, p):
    adj = random_adj(np.random.default_rng(seed), n, p)
    g = graph_from_adj(adj)
    assert exact_chromatic(g) == brute_chromatic(adj)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 11), st.floats(0.1, 0.9))
def test_exact_wis_matches_enumeration(seed, n, p):
    rng = np.random.default_rng(seed)
    adj = random_adj(rng, n, p)
    w = rng.uniform(0.1, 5, size=n)
    sol = exact_wis(graph_from_adj(adj), w)
    assert sol.is_independent(adj)
    assert sol.total_weight == pytest.approx(brute_wis(adj, w))


def test_known_chromatic_numbers():
    # odd cycle needs 3, even cycle 2, complete graph n
    for n, want in ((5, 3), (6, 2)):
        adj = np.zeros((n, n), bool)
        for k in range(n):
            adj[k, (k + 1) % n] = adj[(k + 1) % n, k] = True
        assert exact_chromatic(graph_from_adj(adj)) == want
    full = ~np.eye(6, dtype=bool)
    assert exact_chromatic(graph_from_adj(full)) == 6
    assert exact_chromatic(graph_from_adj(np.zeros((0, 0), bool))) == 0


@pytest.mark.parametrize("seed", range(10))
def test_greedy_is_proper_and_within_b_measure(seed):
    inst = random_planar(80, 2**10, seed, side=400)
    for f in (SublinearFn.constant(1), SublinearFn.tlog(3, 2), SublinearFn.log(2)):
        g = build(inst, f)
        col = greedy_color(g)
        assert col.is_proper(g.adj)
        assert col.colors_used <= b_measure(inst, f)
        assert col.colors_used <= g.max_post_degree() + 1


def test_greedy_on_clique_uses_n_colors():
    adj = ~np.eye(5, dtype=bool)
    col = greedy_color(graph_from_adj(adj))
    assert col.colors_used == 5
    assert sorted(map(len, col.classes())) == [1] * 5


@pytest.mark.parametrize("seed", range(15))
def test_local_ratio_is_independent_and_within_twelve(seed):
    rng = np.random.default_rng(seed)
    inst = random_planar(16, 2**6, seed, side=40)
    w = rng.uniform(0.5, 10, size=inst.n)
    g = build(inst, SublinearFn.log())
    lr = local_ratio_wis(g, w)
    opt = exact_wis(g, w)
    assert lr.is_independent(g.adj)
    assert lr.total_weight >= opt.total_weight / 12 - 1e-9
    assert lr.total_weight == pytest.approx(sum(w[k] for k in lr.chosen))


def test_local_ratio_on_clique_picks_heaviest_link():
    adj = ~np.eye(4, dtype=bool)
    g = graph_from_adj(adj)
    sol = local_ratio_wis(g, [1.0, 5.0, 2.0, 3.0])
    assert sol.chosen == [1] and sol.total_weight == 5.0


def test_weights_validated():
    g = graph_from_adj(np.zeros((2, 2), bool))
    with pytest.raises(ValueError):
        local_ratio_wis(g, [1.0, 0.0])
    with pytest.raises(ValueError):
        local_ratio_wis(g, [1.0])
    assert local_ratio_wis(g).total_weight == 2.0


def test_exact_limits():
    g = graph_from_adj(np.zeros((25, 25), bool))
    with pytest.raises(ValueError):
        exact_wis(g)
    with pytest.raises(ValueError):
        exact_chromatic(g)
