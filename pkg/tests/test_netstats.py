import math

import networkx as nx
import numpy as np
import pytest

from psilingam.netstats import (
    detect_hubs,
    global_efficiency,
    hub_threshold,
    network_stats,
    node_table,
    transitivity,
)
from psilingam.simbench import random_dag


def random_digraph(p, prob, seed):
    rng = np.random.default_rng(seed)
    a = (rng.random((p, p)) < prob).astype(int)
    np.fill_diagonal(a, 0)
    return a


def nx_directed_efficiency(a):
    g = nx.DiGraph(a)
    p = a.shape[0]
    lengths = dict(nx.all_pairs_shortest_path_length(g))
    total = sum(1 / lengths[i][j] for i in range(p) for j in range(p) if i != j and j in lengths[i])
    return total / (p * (p - 1))


def test_empty_and_complete():
    s = network_stats(np.zeros((4, 4)))
    assert (s.density, s.transitivity, s.global_efficiency) == (0, 0, 0)
    full = 1 - np.eye(3, dtype=int)
    s = network_stats(full)
    assert s.density == 1 and s.transitivity == pytest.approx(1) and s.global_efficiency == pytest.approx(1)


def test_path_graph():
    a = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]])
    s = network_stats(a)
    assert s.density == pytest.approx(1 / 3)
    assert s.global_efficiency == pytest.approx(5 / 12)
    assert s.transitivity == 0
    np.testing.assert_array_equal(s.sum_degree, [1, 2, 1])


def test_against_networkx():
    for seed in range(20):
        a = random_digraph(12, 0.2, seed)
        assert transitivity(a) == pytest.approx(nx.transitivity(nx.Graph(a)), abs=1e-12)
        assert global_efficiency(a) == pytest.approx(nx_directed_efficiency(a), abs=1e-12)


def test_stats_invariants():
    for seed in range(30):
        a = random_digraph(10, 0.25, seed)
        s = network_stats(a)
        assert 0 <= s.density <= 1 and 0 <= s.transitivity <= 1 and 0 <= s.global_efficiency <= 1
        assert math.isclose(s.density * 90, a.sum()) and round(s.density * 90) == a.sum()
        perm = np.random.default_rng(seed).permutation(10)
        sp = network_stats(a[np.ix_(perm, perm)])
        assert (sp.density, sp.transitivity) == (s.density, s.transitivity)
        assert sp.global_efficiency == pytest.approx(s.global_efficiency, abs=1e-12)
        np.testing.assert_array_equal(sp.in_degree, s.in_degree[perm])


def test_efficiency_monotone_under_edge_addition():
    for seed in range(30):
        a = random_digraph(10, 0.15, seed)
        b = a | random_digraph(10, 0.1, 1000 + seed)
        assert global_efficiency(b) >= global_efficiency(a) - 1e-15


def test_regular_graph_has_no_hubs():
    cycle = np.roll(np.eye(6, dtype=int), 1, axis=1)
    h = detect_hubs(cycle)
    assert h.in_hubs == h.out_hubs == h.sum_hubs == []
    assert hub_threshold(np.full(5, 2)) == np.inf


def test_star_in_hub():
    a = np.zeros((8, 8), dtype=int)
    a[:7, 7] = 1
    thr = hub_threshold([0] * 7 + [8])
    assert thr == pytest.approx(1 + 2 * math.sqrt(8), abs=1e-12)
    assert thr == pytest.approx(6.657, abs=1e-3) and 8 >= thr
    h = detect_hubs(a)
    assert h.in_hubs == [(7, 7)]
    # node 7 also tops the sum degree but is reported only once
    assert all(k != 7 for k, _ in h.sum_hubs)
    assert h.hub_type(7) == "in" and h.hub_type(0) == "-"


def test_sum_hubs_disjoint():
    for seed in range(50):
        h = detect_hubs(random_dag(15, 2, seed))
        io = {k for k, _ in h.in_hubs} | {k for k, _ in h.out_hubs}
        assert not io & {k for k, _ in h.sum_hubs}


def _oracle_hubs(deg):
    m = sum(deg) / len(deg)
    sd = math.sqrt(sum((d - m) ** 2 for d in deg) / (len(deg) - 1))
    return {k for k, d in enumerate(deg) if sd > 0 and d >= m + 2 * sd}


def test_hubs_match_plain_arithmetic():
    found_sum_only = False
    for seed in range(100):
        a = random_dag(15, 2, seed)
        ind, outd = a.sum(axis=0).tolist(), a.sum(axis=1).tolist()
        h = detect_hubs(a)
        assert {k for k, _ in h.in_hubs} == _oracle_hubs(ind)
        assert {k for k, _ in h.out_hubs} == _oracle_hubs(outd)
        expect_sum = _oracle_hubs([i + o for i, o in zip(ind, outd)]) - _oracle_hubs(ind) - _oracle_hubs(outd)
        assert {k for k, _ in h.sum_hubs} == expect_sum
        found_sum_only |= bool(expect_sum)
    assert found_sum_only


def test_validation():
    with pytest.raises(ValueError):
        network_stats(np.eye(3))
    with pytest.raises(ValueError):
        network_stats(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        detect_hubs(np.zeros((2, 2)))


def test_node_table():
    a = np.array([[0, 1, 1], [0, 0, 0], [0, 0, 0]])
    text = node_table(network_stats(a), detect_hubs(a), ["a", "b", "c"])
    lines = text.splitlines()
    assert lines[0].split("\t") == ["node", "label", "in_deg", "out_deg", "sum_deg", "hub_type"]
    assert lines[1].split("\t")[:5] == ["0", "a", "0", "2", "2"]
