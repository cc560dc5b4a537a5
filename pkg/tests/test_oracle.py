from hypothesis import given, settings, strategies as hst
import pytest

from dmst import graph as gm
from dmst.graph import GraphStructureError, WeightedEdge, WeightedGraph
from dmst.oracle import component_loe, edges_from_keys, kruskal, prim, verify_spanning_tree


def test_triangle():
    g = WeightedGraph(range(3), [(0, 1, 1), (1, 2, 2), (0, 2, 3)])
    r = kruskal(g)
    assert sorted(e.w for e in r.edges) == [1, 2]
    assert r.total_weight == 3


def test_tree_input_keeps_all_edges():
    g = gm.generate_caterpillar(5, 2, 0)
    assert kruskal(g).edges == frozenset(g.edges)
    assert prim(g).edges == frozenset(g.edges)


def test_cross_oracle_fixed_instance():
    g = gm.generate_random_connected(128, 512, 2)
    assert kruskal(g).edges == prim(g).edges


def test_cross_oracle_sweep():
    for s in range(200):
        n = 2 + s % 60
        m = min(n * (n - 1) // 2, n - 1 + (s * 7) % (2 * n))
        g = gm.generate_random_connected(n, m, s)
        assert kruskal(g).keys == prim(g).keys


def test_disconnected():
    g = WeightedGraph([0, 1], [], require_connected=False)
    with pytest.raises(GraphStructureError):
        kruskal(g)
    with pytest.raises(GraphStructureError):
        prim(g)


def test_verify_spanning_tree():
    g = gm.generate_random_connected(30, 80, 1)
    tree = kruskal(g).edges
    assert verify_spanning_tree(tree, g).ok
    missing = verify_spanning_tree(list(tree)[1:], g)
    assert not missing.ok and not missing.connected
    extra = next(e for e in g.edges if e not in tree)
    cyc = verify_spanning_tree(list(tree) + [extra], g)
    assert not cyc.ok and not cyc.acyclic


def test_verify_detects_wrong_tree():
    g = WeightedGraph(range(3), [(0, 1, 1), (1, 2, 2), (0, 2, 3)])
    rep = verify_spanning_tree([WeightedEdge(0, 1, 1), WeightedEdge(0, 2, 3)], g)
    assert rep.acyclic and rep.connected and rep.matches_oracle is False and not rep.ok


def test_edges_from_keys_and_component_loe():
    g = gm.generate_complete(5, 3)
    keys = kruskal(g).keys
    assert edges_from_keys(g, keys) == kruskal(g).edges
    assert component_loe(g, g.node_ids) is None


@settings(max_examples=50, deadline=None)
@given(n=hst.integers(2, 30), seed=hst.integers(0, 10 ** 6), dense=hst.booleans())
def test_cut_property(n, seed, dense):
    """Every component's lightest outgoing edge lies in the MST."""
    m = n * (n - 1) // 2 if dense else min(n * (n - 1) // 2, 2 * n)
    g = gm.generate_random_connected(n, m, seed)
    mst = kruskal(g).keys
    half = set(g.node_ids[: n // 2 or 1])
    e = component_loe(g, half)
    assert e is not None and e.key in mst
