"""Numeric graph kernels on CSR arrays, each with a numba and a pure-numpy twin.

The numba versions are used unless ``DMST_NO_NUMBA=1`` is set in the
environment or numba cannot be imported.  Both paths return identical
results; ``tests/test_kernels.py`` checks them against each other.
"""
from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    from numba import njit
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("DMST_NO_NUMBA", "") not in ("1", "true", "yes")


# ------------------------------------------------------------ pure numpy path

def np_bfs_distances(indptr, indices, src, mask=None):
    """Hop distances from ``src`` (-1 if unreachable); ``mask`` restricts allowed nodes."""
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int64)
    if mask is not None and not mask[src]:
        return dist
    dist[src] = 0
    frontier = np.array([src], dtype=np.int64)
    level = 0
    while frontier.size:
        level += 1
        starts = indptr[frontier]
        ends = indptr[frontier + 1]
        lens = ends - starts
        if lens.sum() == 0:
            break
        # gather all neighbours of the frontier in one shot
        offs = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
        nb = indices[np.arange(lens.sum()) + offs]
        nb = np.unique(nb)
        nb = nb[dist[nb] < 0]
        if mask is not None:
            nb = nb[mask[nb]]
        dist[nb] = level
        frontier = nb
    return dist


def np_all_pairs(indptr, indices):
    n = len(indptr) - 1
    out = np.empty((n, n), dtype=np.int64)
    for s in range(n):
        out[s] = np_bfs_distances(indptr, indices, s)
    return out


def np_eccentricities(indptr, indices):
    n = len(indptr) - 1
    ecc = np.empty(n, dtype=np.int64)
    for s in range(n):
        ecc[s] = np_bfs_distances(indptr, indices, s).max()
    return ecc


def np_kruskal(n, us, vs, order):
    """Union-find over edges in ``order``; returns a boolean tree mask."""
    parent = np.arange(n)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    mask = np.zeros(len(us), dtype=np.bool_)
    taken = 0
    for k in order:
        a, b = find(us[k]), find(vs[k])
        if a != b:
            parent[a] = b
            mask[k] = True
            taken += 1
            if taken == n - 1:
                break
    return mask


# ------------------------------------------------------------ numba path

if _HAVE_NUMBA:

    @njit(cache=True)
    def _nb_bfs(indptr, indices, src, mask, use_mask):
        n = indptr.shape[0] - 1
        dist = np.full(n, -1, dtype=np.int64)
        if use_mask and not mask[src]:
            return dist
        queue = np.empty(n, dtype=np.int64)
        head = 0
        tail = 0
        dist[src] = 0
        queue[tail] = src
        tail += 1
        while head < tail:
            x = queue[head]
            head += 1
            for p in range(indptr[x], indptr[x + 1]):
                y = indices[p]
                if dist[y] < 0 and (not use_mask or mask[y]):
                    dist[y] = dist[x] + 1
                    queue[tail] = y
                    tail += 1
        return dist

    @njit(cache=True)
    def _nb_all_pairs(indptr, indices):
        n = indptr.shape[0] - 1
        out = np.empty((n, n), dtype=np.int64)
        dummy = np.zeros(1, dtype=np.bool_)
        for s in range(n):
            out[s] = _nb_bfs(indptr, indices, s, dummy, False)
        return out

    @njit(cache=True)
    def _nb_eccentricities(indptr, indices):
        n = indptr.shape[0] - 1
        ecc = np.empty(n, dtype=np.int64)
        dummy = np.zeros(1, dtype=np.bool_)
        for s in range(n):
            ecc[s] = _nb_bfs(indptr, indices, s, dummy, False).max()
        return ecc

    @njit(cache=True)
    def _nb_kruskal(n, us, vs, order):
        parent = np.arange(n)
        mask = np.zeros(us.shape[0], dtype=np.bool_)
        taken = 0
        for t in range(order.shape[0]):
            k = order[t]
            a = us[k]
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            b = vs[k]
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            if a != b:
                parent[a] = b
                mask[k] = True
                taken += 1
                if taken == n - 1:
                    break
        return mask


# ------------------------------------------------------------ dispatch

def bfs_distances(indptr, indices, src, mask=None):
    if USE_NUMBA:
        if mask is None:
            return _nb_bfs(indptr, indices, int(src), np.zeros(1, dtype=np.bool_), False)
        return _nb_bfs(indptr, indices, int(src), np.asarray(mask, dtype=np.bool_), True)
    return np_bfs_distances(indptr, indices, int(src), mask)


def all_pairs_distances(indptr, indices):
    if USE_NUMBA:
        return _nb_all_pairs(indptr, indices)
    return np_all_pairs(indptr, indices)


def eccentricities(indptr, indices):
    if USE_NUMBA:
        return _nb_eccentricities(indptr, indices)
    return np_eccentricities(indptr, indices)


def kruskal_mask(n, us, vs, order):
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    order = np.asarray(order, dtype=np.int64)
    if USE_NUMBA:
        return _nb_kruskal(n, us, vs, order)
    return np_kruskal(n, us, vs, order)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
