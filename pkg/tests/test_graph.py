from collections import deque

from hypothesis import given, settings, strategies as hst
import numpy as np
import pytest

from dmst import graph as gm
from dmst.graph import GraphParameterError, GraphStructureError, WeightedEdge, WeightedGraph


def bfs_reach(g, src):
    adj = {x: set() for x in g.node_ids}
    for e in g.edges:
        adj[e.u].add(e.v)
        adj[e.v].add(e.u)
    seen = {src}
    dq = deque([src])
    while dq:
        x = dq.popleft()
        for y in adj[x] - seen:
            seen.add(y)
            dq.append(y)
    return seen


def matrix_power_diameter(g):
    """Hop diameter by boolean matrix powers, independent of the BFS kernels."""
    n = g.n
    a = np.eye(n, dtype=np.int64)
    for e in g.edges:
        a[g.index[e.u], g.index[e.v]] = a[g.index[e.v], g.index[e.u]] = 1
    reach = np.eye(n, dtype=np.int64)
    k = 0
    while not reach.all():
        reach = np.minimum(reach @ a, 1)
        k += 1
    return k


def test_single_node():
    g = gm.generate_random_connected(1, 0, 0)
    assert g.n == 1 and g.m == 0


def test_random_connected_by_independent_traversal():
    g = gm.generate_random_connected(8, 12, 7)
    assert g.m == 12
    assert bfs_reach(g, g.node_ids[0]) == set(g.node_ids)


def test_infeasible_edge_count():
    with pytest.raises(GraphParameterError):
        gm.generate_random_connected(4, 7, 0)
    with pytest.raises(GraphParameterError):
        gm.generate_random_connected(5, 3, 0)


def test_path_generator():
    assert gm.generate_path(1).m == 0
    g4 = gm.generate_path(4)
    assert sorted(e.w for e in g4.edges) == [1, 2, 3]
    assert gm.hop_diameter(gm.generate_path(5)) == 4


def test_diameters():
    assert gm.hop_diameter(gm.generate_path(5)) == 4
    assert gm.hop_diameter(gm.generate_complete(4, 0)) == 1
    g = gm.generate_random_connected(32, 64, 3)
    d = gm.hop_diameter(g)
    assert d.exact and d == matrix_power_diameter(g)


def test_sampled_diameter_flagged():
    g = gm.generate_path(40)
    d = gm.hop_diameter(g, exact_threshold=10, samples=4)
    assert not d.exact
    assert 39 / 2 <= d <= 39


def test_disconnected_rejected():
    with pytest.raises(GraphStructureError):
        WeightedGraph([0, 1, 2], [(0, 1, 1)])
    g = WeightedGraph([0, 1, 2], [(0, 1, 1)], require_connected=False)
    with pytest.raises(GraphStructureError):
        gm.hop_diameter(g)


@pytest.mark.parametrize("edges", [[(0, 0, 1)], [(0, 1, 1), (1, 0, 2)], [(0, 5, 1)]])
def test_structural_errors(edges):
    with pytest.raises(GraphStructureError):
        WeightedGraph([0, 1], edges)


def test_edge_key_breaks_ties_by_ids():
    a, b = WeightedEdge(3, 1, 5), WeightedEdge(0, 2, 5)
    assert a.key == (5, 1, 3)
    assert b < a


def test_ports_follow_edge_order_and_port_order():
    edges = [(0, 1, 1), (0, 2, 2), (0, 3, 3)]
    g = WeightedGraph(range(4), edges)
    assert [g.port_target(0, p)[0] for p in (1, 2, 3)] == [1, 2, 3]
    h = WeightedGraph(range(4), edges, port_order={0: [2, 0, 1]})
    assert [h.port_target(0, p)[0] for p in (1, 2, 3)] == [3, 1, 2]
    assert h.port_target(3, 1) == (0, 1)
    with pytest.raises(GraphStructureError):
        WeightedGraph(range(4), edges, port_order={0: [0, 1]})


def test_text_roundtrip(tmp_path):
    g = gm.generate_random_connected(20, 40, 1)
    path = tmp_path / "g.txt"
    gm.save(g, path)
    assert gm.load(path) == g
    with pytest.raises(GraphStructureError):
        gm.loads("3 2\n0 1 1\n")


def test_relabel_keeps_ports():
    g = gm.generate_grid(3, 4, 2)
    h = gm.relabel(g, 100)
    for x in g.node_ids:
        for p in range(1, g.degree(x) + 1):
            y, q = g.port_target(x, p)
            assert h.port_target(x + 100, p) == (y + 100, q)


@settings(max_examples=60, deadline=None)
@given(n=hst.integers(1, 40), extra=hst.integers(0, 60), seed=hst.integers(0, 10 ** 6))
def test_random_graph_properties(n, extra, seed):
    m = min(n - 1 + extra, n * (n - 1) // 2)
    g = gm.generate_random_connected(n, m, seed)
    assert g.m == m
    assert len({e.key for e in g.edges}) == m
    assert len({e.w for e in g.edges}) == m
    assert bfs_reach(g, 0) == set(g.node_ids)
    for x in g.node_ids:
        seen = set()
        for p in range(1, g.degree(x) + 1):
            y, q = g.port_target(x, p)
            assert g.port_target(y, q) == (x, p)
            seen.add(y)
        assert len(seen) == g.degree(x)


@pytest.mark.parametrize("make", [
    lambda: gm.generate_grid(4, 5, 0),
    lambda: gm.generate_caterpillar(6, 2, 0),
    lambda: gm.generate_banded_path(50, 4, 30, 0),
])
def test_structured_generators_connected(make):
    g = make()
    assert bfs_reach(g, 0) == set(g.node_ids)
    assert len({e.key for e in g.edges}) == g.m
