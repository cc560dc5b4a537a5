"""Hard instances: slow paths, a long highway and a random regular core.

Layout of ``build_hard_graph``:

* highway h_0 .. h_D (D = ``D_target``).  The middle edge h_mid - h_mid+1 is
  replaced by two edges into the same core node, so h_0 and h_D are D + 1
  hops apart;
* a random d-regular core whose edges are the switch edges;
* p slow paths of L nodes each.  Node s has a spoke to the first node of
  every slow path and t has one to the last node.  s and t also hang off
  the core;
* every slow-path node has a shortcut into the core (round-robin over core
  nodes), so the diameter is set by the highway and stays within a few hops
  of D once D exceeds twice the core's eccentricity.

Weights: ``unit`` makes every weight 1 (ties are broken by the endpoint
ids).  ``disjointness`` gives weight 1 to highway, core, slow-path and
attachment edges, weight ``INF`` to shortcuts, and weight 1 or N to the
i-th spoke of s (t) when X[i] (Y[i]) is 0 or 1, where N is the node count.
Slow path i is then reachable by weight-1 edges iff not (X[i] and Y[i]), so
the MST weighs exactly N - 1 iff X and Y are disjoint.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from . import _kernels
from .graph import GraphParameterError, GraphStructureError, WeightedEdge, WeightedGraph

CORE_DIAMETER_FACTOR = 3.0   # cores are resampled until diameter <= factor * log2(N)
CORE_ATTEMPTS = 200


@dataclass(frozen=True)
class LowerBoundParams:
    p: int
    L: int
    D_target: int
    d_core: int = 3
    core_size: int = 16
    weight_mode: str = "unit"            # "unit" | "disjointness"
    X: tuple = ()
    Y: tuple = ()
    seed: int = 0
    id_offset: int = 0                 # added to every node id (for dumbbells)

    def validate(self) -> None:
        if min(self.p, self.L, self.D_target) < 1:
            raise GraphParameterError("p, L and D_target must be at least 1")
        if self.d_core < 1 or self.d_core >= self.core_size:
            raise GraphParameterError("need 1 <= d_core < core_size")
        if (self.d_core * self.core_size) % 2:
            raise GraphParameterError("d_core * core_size must be even")
        if self.weight_mode not in ("unit", "disjointness"):
            raise GraphParameterError(f"unknown weight mode {self.weight_mode!r}")
        if self.weight_mode == "disjointness" and not (len(self.X) == len(self.Y) == self.p):
            raise GraphParameterError("disjointness mode needs |X| = |Y| = p")

    def node_count(self) -> int:
        return (self.D_target + 1) + 2 + self.p * self.L + self.core_size

    def to_dict(self) -> dict:
        return {"p": self.p, "L": self.L, "D_target": self.D_target, "d_core": self.d_core,
                "core_size": self.core_size, "weight_mode": self.weight_mode,
                "X": list(self.X), "Y": list(self.Y), "seed": self.seed,
                "id_offset": self.id_offset}


class HardGraph(WeightedGraph):
    """A built instance that remembers its switch edges and layout."""

    def __init__(self, node_ids, edges, switch_edges, params, layout, port_order=None):
        super().__init__(node_ids, edges, port_order=port_order)
        self.switch_edges = frozenset(switch_edges)
        self.params = params
        self.layout = layout


def random_regular(size: int, d: int, rng: np.random.Generator, max_diameter: float):
    """Pairing-model d-regular graph on 0..size-1, resampled until simple,
    connected and of diameter <= ``max_diameter``."""
    for _ in range(CORE_ATTEMPTS):
        stubs = np.repeat(np.arange(size), d)
        rng.shuffle(stubs)
        pairs = set()
        ok = True
        for a, b in zip(stubs[0::2], stubs[1::2]):
            a, b = int(a), int(b)
            if a == b or (min(a, b), max(a, b)) in pairs:
                ok = False
                break
            pairs.add((min(a, b), max(a, b)))
        if not ok:
            continue
        g = WeightedGraph(range(size), [(a, b, 1) for a, b in sorted(pairs)], require_connected=False)
        if not g.is_connected():
            continue
        ecc = _kernels.eccentricities(*g.csr())
        if ecc.max() <= max_diameter:
            return sorted(pairs)
    raise GraphParameterError(f"no {d}-regular core on {size} nodes within diameter {max_diameter:.1f}")


def build_hard_graph(params: LowerBoundParams) -> HardGraph:
    params.validate()
    p, L, D = params.p, params.L, params.D_target
    N = params.node_count()
    inf = N ** 4
    rng = np.random.default_rng(params.seed)
    o = params.id_offset
    hw = list(range(o, o + D + 1))
    s, t = o + D + 1, o + D + 2
    base = o + D + 3
    slow = [[base + i * L + j for j in range(L)] for i in range(p)]
    cbase = base + p * L
    core = list(range(cbase, cbase + params.core_size))
    disj = params.weight_mode == "disjointness"

    def w(kind, bit=0):
        if not disj:
            return 1
        if kind == "shortcut":
            return inf
        if kind == "spoke":
            return N if bit else 1
        return 1

    edges = []
    mid = D // 2
    for k in range(D):
        if k != mid:
            edges.append(WeightedEdge(hw[k], hw[k + 1], w("highway")))
    edges.append(WeightedEdge(hw[mid], core[0], w("highway")))
    edges.append(WeightedEdge(hw[mid + 1], core[0], w("highway")))
    edges.append(WeightedEdge(s, core[1 % len(core)], w("attach")))
    edges.append(WeightedEdge(t, core[2 % len(core)], w("attach")))
    switch = []
    for a, b in random_regular(params.core_size, params.d_core, rng,
                               CORE_DIAMETER_FACTOR * math.log2(max(N, 2))):
        e = WeightedEdge(core[a], core[b], w("core"))
        edges.append(e)
        switch.append(e.key)
    r = 0
    for i in range(p):
        path = slow[i]
        for j in range(L - 1):
            edges.append(WeightedEdge(path[j], path[j + 1], w("slow")))
        edges.append(WeightedEdge(s, path[0], w("spoke", params.X[i] if disj else 0)))
        edges.append(WeightedEdge(t, path[-1], w("spoke", params.Y[i] if disj else 0)))
        for x in path:
            edges.append(WeightedEdge(x, core[r % len(core)], w("shortcut")))
            r += 1
    layout = {"highway": hw, "s": s, "t": t, "slow": slow, "core": core}
    return HardGraph(range(o, o + N), edges, switch, params, layout)


@dataclass(frozen=True)
class OpenGraph:
    base: WeightedGraph
    removed: WeightedEdge
    stubs: tuple          # ((u, port at u), (v, port at v)) in the base graph

    @property
    def edges(self) -> list:
        return [e for e in self.base.edges if e != self.removed]


def open_graph(g: WeightedGraph, e: WeightedEdge) -> OpenGraph:
    iu, iv = g.index[e.u], g.index[e.v]
    k = g.edges.index(e)
    pu = next(p for p, (_, kk) in enumerate(g.adjacency[iu], 1) if kk == k)
    pv = next(p for p, (_, kk) in enumerate(g.adjacency[iv], 1) if kk == k)
    return OpenGraph(g, e, ((e.u, pu), (e.v, pv)))


def enumerate_open_graphs(g: WeightedGraph, limit: int, seed: int = 0) -> list[OpenGraph]:
    """Up to ``limit`` open graphs, each missing a different switch edge."""
    switch = getattr(g, "switch_edges", None)
    if not switch:
        raise GraphParameterError("graph has no designated switch edges")
    keys = sorted(switch)
    rng = np.random.default_rng(seed)
    pick = rng.permutation(len(keys))[:max(0, limit)]
    by_key = {e.key: e for e in g.edges}
    return [open_graph(g, by_key[keys[int(k)]]) for k in pick]


def dumbbell(g1: OpenGraph, g2: OpenGraph) -> WeightedGraph:
    """Join two open graphs by bridging their stubs (u1-u2 and v1-v2).

    Every node keeps its port numbers; a bridge takes the port of the
    removed edge at both of its ends.
    """
    ids1, ids2 = set(g1.base.node_ids), set(g2.base.node_ids)
    if ids1 & ids2:
        raise GraphParameterError("open graphs must use disjoint node ids")
    (u1, _), (v1, _) = g1.stubs
    (u2, _), (v2, _) = g2.stubs
    e1, e2 = g1.edges, g2.edges
    bridges = [WeightedEdge(u1, u2, g1.removed.w), WeightedEdge(v1, v2, g2.removed.w)]
    edges = e1 + e2 + bridges
    index = {e: k for k, e in enumerate(edges)}
    port_order = {}
    for og, stub_bridge in ((g1, {u1: bridges[0], v1: bridges[1]}), (g2, {u2: bridges[0], v2: bridges[1]})):
        base = og.base
        for x, bridge in stub_bridge.items():
            order = []
            for _, k in base.adjacency[base.index[x]]:
                e = base.edges[k]
                order.append(index[bridge] if e == og.removed else index[e])
            port_order[x] = order
    try:
        return WeightedGraph(list(g1.base.node_ids) + list(g2.base.node_ids), edges,
                             port_order=port_order)
    except GraphStructureError as exc:
        raise GraphParameterError(str(exc)) from exc
