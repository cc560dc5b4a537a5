"""The numba kernels and their pure-numpy twins must agree exactly."""
import numpy as np
import pytest

from dmst import _kernels as K
from dmst import graph as gm

pytestmark = pytest.mark.skipif(not K._HAVE_NUMBA, reason="numba not installed")

GRAPHS = [
    gm.generate_random_connected(60, 150, 0),
    gm.generate_path(33, seed=1),
    gm.generate_grid(5, 7, 2),
    gm.generate_caterpillar(10, 3, 3),
    gm.generate_random_connected(1, 0, 0),
]


@pytest.mark.parametrize("g", GRAPHS, ids=repr)
def test_distance_kernels_agree(g):
    indptr, indices = g.csr()
    assert np.array_equal(K._nb_all_pairs(indptr, indices), K.np_all_pairs(indptr, indices))
    assert np.array_equal(K._nb_eccentricities(indptr, indices), K.np_eccentricities(indptr, indices))


@pytest.mark.parametrize("g", GRAPHS[:4], ids=repr)
def test_masked_bfs_agrees(g):
    indptr, indices = g.csr()
    rng = np.random.default_rng(0)
    for _ in range(5):
        mask = rng.random(g.n) < 0.7
        src = int(np.flatnonzero(mask)[0])
        a = K._nb_bfs(indptr, indices, src, mask, True)
        b = K.np_bfs_distances(indptr, indices, src, mask)
        assert np.array_equal(a, b)


@pytest.mark.parametrize("seed", range(10))
def test_kruskal_agrees(seed):
    g = gm.generate_random_connected(80, 300, seed)
    order = np.array(sorted(range(g.m), key=lambda k: g.edges[k].key), dtype=np.int64)
    us = np.array([g.index[e.u] for e in g.edges], dtype=np.int64)
    vs = np.array([g.index[e.v] for e in g.edges], dtype=np.int64)
    a = K._nb_kruskal(g.n, us, vs, order)
    b = K.np_kruskal(g.n, us, vs, order)
    assert np.array_equal(a, b)
    assert a.sum() == g.n - 1


def test_backend_name():
    assert K.backend() in ("numba", "numpy")
