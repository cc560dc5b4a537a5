import pytest

from dmst import _kernels, graph as gm
from dmst.election import estimate_diameter, run_election
from dmst.sim import make_nodes
from dmst.stages import Runner, fresh_states


def test_path_and_complete():
    d, _, _ = estimate_diameter(gm.generate_path(5))
    assert 4 <= d <= 8
    d, _, _ = estimate_diameter(gm.generate_complete(4, 0))
    assert 1 <= d <= 2


def test_random_graph_against_exact_diameter():
    g = gm.generate_random_connected(64, 200, 1)
    d, _, _ = estimate_diameter(g)
    exact = gm.hop_diameter(g)
    assert exact <= d <= 2 * exact


@pytest.mark.parametrize("seed", range(5))
def test_bfs_tree_is_shortest_path_tree(seed):
    g = gm.generate_random_connected(80, 160, seed)
    nodes = make_nodes(g, seed)
    fresh_states(nodes)
    run_election(Runner(g, nodes, seed))
    root = [nd for nd in nodes if nd.state.bfs_parent == 0]
    assert len(root) == 1
    indptr, indices = g.csr()
    dist = _kernels.bfs_distances(indptr, indices, g.index[root[0].node_id])
    for nd in nodes:
        assert nd.state.bfs_depth == dist[g.index[nd.node_id]]
        if nd.state.bfs_parent:
            up, _ = g.port_target(nd.node_id, nd.state.bfs_parent)
            assert dist[g.index[up]] == nd.state.bfs_depth - 1


def test_messages_near_linear_in_m():
    g = gm.generate_random_connected(256, 1024, 0)
    _, _, m = estimate_diameter(g)
    assert m.messages_total <= 40 * g.m
