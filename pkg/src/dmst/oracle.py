"""Sequential MST oracles (Kruskal, Prim) and spanning-tree verification."""
from __future__ import annotations

from dataclasses import dataclass, field
import heapq

import numpy as np

from . import _kernels
from .graph import GraphStructureError, WeightedEdge, WeightedGraph


@dataclass(frozen=True)
class MstResult:
    edges: frozenset
    total_weight: int
    provenance: str  # "oracle" | "ghs" | "opt"

    @property
    def keys(self) -> frozenset:
        return frozenset(e.key for e in self.edges)


def kruskal(g: WeightedGraph) -> MstResult:
    if not g.is_connected():
        raise GraphStructureError("MST undefined for a disconnected graph")
    if g.m == 0:
        return MstResult(frozenset(), 0, "oracle")
    order = sorted(range(g.m), key=lambda k: g.edges[k].key)
    us = [g.index[e.u] for e in g.edges]
    vs = [g.index[e.v] for e in g.edges]
    mask = _kernels.kruskal_mask(g.n, us, vs, order)
    chosen = frozenset(g.edges[k] for k in np.flatnonzero(mask))
    return MstResult(chosen, sum(e.w for e in chosen), "oracle")


def prim(g: WeightedGraph) -> MstResult:
    """Heap-based Prim from the first node; independent of the union-find route."""
    if not g.is_connected():
        raise GraphStructureError("MST undefined for a disconnected graph")
    if g.n <= 1:
        return MstResult(frozenset(), 0, "oracle")
    inside = [False] * g.n
    inside[0] = True
    heap = [(g.edges[k].key, k, j) for j, k in g.adjacency[0]]
    heapq.heapify(heap)
    chosen = []
    while heap and len(chosen) < g.n - 1:
        _, k, j = heapq.heappop(heap)
        if inside[j]:
            continue
        inside[j] = True
        chosen.append(g.edges[k])
        for jj, kk in g.adjacency[j]:
            if not inside[jj]:
                heapq.heappush(heap, (g.edges[kk].key, kk, jj))
    return MstResult(frozenset(chosen), sum(e.w for e in chosen), "oracle")


@dataclass
class TreeReport:
    ok: bool
    edge_count_ok: bool
    acyclic: bool
    connected: bool
    matches_oracle: bool | None
    problems: list = field(default_factory=list)


def verify_spanning_tree(edges, g: WeightedGraph, compare_oracle: bool = True) -> TreeReport:
    """Check |E| = n-1, acyclicity, connectivity and optionally Kruskal equality."""
    edges = list(edges)
    problems = []
    count_ok = len(edges) == g.n - 1
    if not count_ok:
        problems.append(f"expected {g.n - 1} edges, got {len(edges)}")
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    acyclic = True
    for e in edges:
        if e.u not in g.index or e.v not in g.index:
            problems.append(f"edge {e} not in graph")
            acyclic = False
            continue
        a, b = find(g.index[e.u]), find(g.index[e.v])
        if a == b:
            acyclic = False
            problems.append(f"cycle closed by {e}")
        else:
            parent[a] = b
    roots = {find(i) for i in range(g.n)}
    connected = len(roots) == 1
    if not connected:
        problems.append(f"disconnected: {len(roots)} components")
    matches = None
    if compare_oracle:
        want = kruskal(g).keys
        got = frozenset(e.key for e in edges)
        matches = want == got
        if not matches:
            problems.append("differs from Kruskal oracle")
    ok = count_ok and acyclic and connected and (matches is not False)
    return TreeReport(ok, count_ok, acyclic, connected, matches, problems)


def edges_from_keys(g: WeightedGraph, keys) -> frozenset:
    lookup = {e.key: e for e in g.edges}
    return frozenset(lookup[k] for k in keys)


def component_loe(g: WeightedGraph, component) -> WeightedEdge | None:
    """Minimum-key edge with exactly one endpoint in ``component`` (None if none)."""
    comp = set(component)
    best = None
    for x in comp:
        for j, k in g.adjacency[g.index[x]]:
            if g.node_ids[j] not in comp:
                e = g.edges[k]
                if best is None or e.key < best.key:
                    best = e
    return best
