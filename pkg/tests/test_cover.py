import dataclasses
import json

import pytest

from dmst import graph as gm
from dmst.cover import Cover, compute_cover, default_kappa, sparsity_bound, verify_cover
from dmst.lbgraphs import LowerBoundParams, build_hard_graph, dumbbell, enumerate_open_graphs


def test_small_diameter_graph_gets_global_tree():
    g = gm.generate_complete(6, 0)
    cover, m = compute_cover(g, W=4)
    assert len(cover.clusters) == 1
    assert cover.clusters[0].members == frozenset(g.node_ids)
    assert verify_cover(cover, g).ok


def test_path9():
    g = gm.generate_path(9)
    cover, _ = compute_cover(g, W=2, kappa=2)
    rep = verify_cover(cover, g)
    assert rep.ok, rep.problems
    for x in g.node_ids:
        ball = {y for y in g.node_ids if abs(x - y) <= 2}
        assert any(ball <= c.members for c in cover.clusters)


def test_random64(calib):
    g = gm.generate_random_connected(64, 128, 5)
    cover, _ = compute_cover(g, W=4)
    rep = verify_cover(cover, g, c_sparse=calib["c_sparse"] * calib["tolerance"])
    assert rep.ok, rep.problems
    assert rep.max_membership <= sparsity_bound(64, cover.kappa, calib["c_sparse"] * calib["tolerance"])


def test_deleted_cluster_is_caught():
    g = gm.generate_path(40)
    cover, _ = compute_cover(g, W=2, kappa=2)
    # drop every cluster containing node 20's 2-ball
    ball = set(range(18, 23))
    keep = [c for c in cover.clusters if not ball <= c.members]
    for k, c in enumerate(keep):
        c.cluster_id = k
    broken = Cover(cover.W, cover.kappa, keep,
                   {x: [c.cluster_id for c in keep if x in c.members] for x in g.node_ids})
    rep = verify_cover(broken, g)
    assert not rep.neighborhood_ok and 20 in rep.uncovered


def test_bad_tree_is_caught():
    g = gm.generate_path(30)
    cover, _ = compute_cover(g, W=2, kappa=2)
    c = max(cover.clusters, key=lambda c: len(c.members))
    x = next(x for x, p in c.parent.items() if p is not None)
    far = next(y for y in c.members if g.edge_between(x, y) is None and y != x)
    c.parent[x] = far
    assert not verify_cover(cover, g).trees_ok


@pytest.mark.parametrize("W", [1, 3])
def test_dumbbell_cover(W):
    base = LowerBoundParams(2, 3, 8, core_size=8)
    g1 = build_hard_graph(base)
    g2 = build_hard_graph(dataclasses.replace(base, id_offset=g1.n, seed=1))
    g = dumbbell(enumerate_open_graphs(g1, 1)[0], enumerate_open_graphs(g2, 1, seed=1)[0])
    cover, _ = compute_cover(g, W=W)
    assert verify_cover(cover, g).ok


def test_kappa_rule():
    assert default_kappa(1) == 1
    assert default_kappa(1024) == 10


def test_json_roundtrip_shape():
    g = gm.generate_path(12)
    cover, _ = compute_cover(g, W=1, kappa=2)
    data = json.loads(cover.to_json())
    assert data["W"] == 1 and len(data["clusters"]) == len(cover.clusters)


def test_rejects_bad_radius():
    with pytest.raises(ValueError):
        compute_cover(gm.generate_path(3), W=0)
