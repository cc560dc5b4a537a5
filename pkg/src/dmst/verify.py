"""Centralized checks on fragment forests: strong and weak diameters."""
from __future__ import annotations

import numpy as np

from . import _kernels
from .graph import WeightedGraph


def _mask(g: WeightedGraph, members) -> np.ndarray:
    mask = np.zeros(g.n, dtype=np.bool_)
    for x in members:
        mask[g.index[x]] = True
    return mask


def strong_diameter(g: WeightedGraph, members, tree_edges=None) -> int:
    """Largest hop distance between members using member nodes only.

    With ``tree_edges`` (keys) the distance is measured inside that edge set.
    Returns -1 when the members are not connected that way.
    """
    members = list(members)
    if len(members) <= 1:
        return 0
    if tree_edges is not None:
        sub = WeightedGraph(members, [e for e in g.edges if e.key in tree_edges
                                      and e.u in set(members) and e.v in set(members)],
                            require_connected=False)
        indptr, indices = sub.csr()
        mask = None
        idx = [sub.index[x] for x in members]
    else:
        indptr, indices = g.csr()
        mask = _mask(g, members)
        idx = [g.index[x] for x in members]
    far = 0
    for s in idx:
        d = _kernels.bfs_distances(indptr, indices, s, mask)
        sel = d[idx]
        if (sel < 0).any():
            return -1
        far = max(far, int(sel.max()))
    return far


def weak_diameter(g: WeightedGraph, members, dist: np.ndarray | None = None) -> int:
    """Largest hop distance in the whole graph between two members."""
    idx = np.array([g.index[x] for x in members], dtype=np.int64)
    if idx.size <= 1:
        return 0
    if dist is not None:
        return int(dist[np.ix_(idx, idx)].max())
    indptr, indices = g.csr()
    return max(int(_kernels.bfs_distances(indptr, indices, int(s))[idx].max()) for s in idx)
