import math

import pytest

from dmst import graph as gm
from dmst.cghs import (ForestComplete, controlled_ghs, depth_bound, iteration_count,
                       lightest_outgoing_edge_of_component, matching_merge_step)
from dmst.graph import WeightedGraph
from dmst.oracle import kruskal
from dmst.verify import strong_diameter
from reference_cghs import reference_controlled_ghs


def check_forest(g, forest):
    mst = kruskal(g).keys
    seen = set()
    for f in forest.fragments.values():
        assert not (f.members & seen)
        seen |= f.members
        assert len(f.edges) == len(f.members) - 1
        assert {e.key for e in f.edges} <= mst
        assert strong_diameter(g, f.members, {e.key for e in f.edges}) >= 0
    assert seen == set(g.node_ids)


def test_single_node():
    forest, m = controlled_ghs(gm.generate_path(1))
    assert len(forest) == 1 and not forest.edges and m.messages_total == 0


def test_star():
    g = WeightedGraph(range(4), [(0, 1, 1), (0, 2, 2), (0, 3, 3)])
    forest, _ = controlled_ghs(g, extra_iterations=-(iteration_count(4) - 1))
    assert len(forest) <= 2
    assert forest.edges <= frozenset(g.edges)


def test_path16_matches_reference(calib):
    g = gm.generate_path(16)
    forest, _ = controlled_ghs(g)
    assert len(forest) <= 4
    for f in forest.fragments.values():
        assert strong_diameter(g, f.members) <= calib["c_ghs"] * calib["tolerance"] * 4
    tree, _ = reference_controlled_ghs(g)
    assert {e.key for e in forest.edges} == tree


@pytest.mark.parametrize("extra", [-2, -1, 0, 1])
@pytest.mark.parametrize("make", [
    lambda s: gm.generate_random_connected(50, 120, s),
    lambda s: gm.generate_path(40, seed=s),
    lambda s: gm.generate_grid(6, 7, s),
    lambda s: gm.generate_caterpillar(12, 3, s),
])
def test_against_reference(make, extra):
    for s in range(3):
        g = make(s)
        forest, _ = controlled_ghs(g, seed=s, extra_iterations=extra)
        tree, comp_of = reference_controlled_ghs(g, extra)
        assert {e.key for e in forest.edges} == tree
        assert forest.fragment_of() == comp_of
        check_forest(g, forest)


def test_depth_bound_holds():
    for s in range(5):
        g = gm.generate_random_connected(120, 200, s)
        its = iteration_count(g.n)
        forest, _ = controlled_ghs(g, seed=s)
        assert len(forest) <= math.ceil(math.sqrt(g.n))
        for f in forest.fragments.values():
            for x in f.members:
                hops, y = 0, x
                while f.parent[y] is not None:
                    y, hops = f.parent[y], hops + 1
                assert y == f.leader and hops <= depth_bound(its)


def test_local_loe():
    g = WeightedGraph(range(4), [(0, 1, 5), (0, 2, 2), (0, 3, 9)])
    assert lightest_outgoing_edge_of_component({0}, g).w == 2
    with pytest.raises(ForestComplete):
        lightest_outgoing_edge_of_component(set(g.node_ids), g)


def test_local_loe_on_k4_split():
    g = gm.generate_complete(4, 0)
    side = {0, 1}
    cut = [e for e in g.edges if (e.u in side) != (e.v in side)]
    assert lightest_outgoing_edge_of_component(side, g) == min(cut)


def test_matching_merge_step():
    g = gm.generate_path(3)
    e01, e12 = g.edges
    assert matching_merge_step([e01], [{0}, {1}]) == [frozenset({0, 1})]
    merged = matching_merge_step([e01, e12], [{0}, {1}, {2}])
    assert merged == [frozenset({0, 1, 2})]
    assert sorted(map(sorted, matching_merge_step([], [{0}, {1}, {2}]))) == [[0], [1], [2]]
