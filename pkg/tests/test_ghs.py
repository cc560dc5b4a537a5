import pytest

from dmst import graph as gm
from dmst.ghs import ghs_classic
from dmst.graph import WeightedEdge, WeightedGraph
from dmst.oracle import kruskal


def test_tree_input():
    g = gm.generate_caterpillar(6, 2, 1)
    res, m = ghs_classic(g)
    assert res.edges == frozenset(g.edges)
    assert m.messages_total >= 2 * g.m


def test_triangle():
    g = WeightedGraph(range(3), [(0, 1, 1), (1, 2, 2), (0, 2, 3)])
    res, _ = ghs_classic(g)
    assert sorted(e.w for e in res.edges) == [1, 2]


def test_single_node():
    res, m = ghs_classic(gm.generate_path(1))
    assert not res.edges and m.messages_total == 0 and m.rounds == 0


@pytest.mark.parametrize("make", [
    lambda s: gm.generate_random_connected(2 + s * 7, min((2 + s * 7) * (1 + s * 7) // 2, 4 * (2 + s * 7)), s),
    lambda s: gm.generate_grid(4, 6, s),
    lambda s: gm.generate_path(25, seed=s),
    lambda s: gm.generate_complete(12, s),
])
def test_sweep_matches_oracle(make):
    for s in range(8):
        g = make(s)
        res, _ = ghs_classic(g, seed=s)
        assert res.keys == kruskal(g).keys


def test_rounds_grow_with_path_length():
    r = [ghs_classic(gm.generate_path(n))[1].rounds for n in (16, 64, 256)]
    assert r[0] < r[1] < r[2]
    assert r[2] >= 255


def path_with_hub(n):
    """Light path 0..n-1 plus a hub joined to every path node by heavy edges: D = 2."""
    edges = [WeightedEdge(i, i + 1, i + 1) for i in range(n - 1)]
    edges += [WeightedEdge(n, i, 10 ** 6 + i) for i in range(n)]
    return WeightedGraph(range(n + 1), edges)


def test_round_gap_grows_when_diameter_is_small():
    from dmst.opt import run_opt_mst
    factors = []
    for n in (64, 256, 1024):
        g = path_with_hub(n)
        factors.append(ghs_classic(g)[1].rounds / run_opt_mst(g)[1].rounds)
    assert factors[0] < factors[1] < factors[2]
