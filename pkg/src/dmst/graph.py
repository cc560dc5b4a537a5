"""Weighted network model: nodes with port-numbered incident edges.

Edge weights are compared through a key ``(w, lo, hi)`` where ``lo < hi`` are
the endpoint ids, so the order is strict even if two numeric weights collide
and the minimum spanning tree is always unique.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
import io

import numpy as np


class GraphParameterError(ValueError):
    """Raised for infeasible generator parameters."""


class GraphStructureError(ValueError):
    """Raised when a graph violates a structural requirement (e.g. connectivity)."""


@dataclass(frozen=True)
class WeightedEdge:
    u: int
    v: int
    w: int

    @property
    def key(self) -> tuple[int, int, int]:
        a, b = (self.u, self.v) if self.u < self.v else (self.v, self.u)
        return (self.w, a, b)

    def other(self, x: int) -> int:
        return self.v if x == self.u else self.u

    def __lt__(self, other: "WeightedEdge") -> bool:
        return self.key < other.key


def edge_key(w: int, a: int, b: int) -> tuple[int, int, int]:
    return (w, a, b) if a < b else (w, b, a)


class HopDiameter(int):
    """An int carrying whether the value is exact or a sampled estimate."""

    exact: bool

    def __new__(cls, value: int, exact: bool = True):
        obj = super().__new__(cls, value)
        obj.exact = exact
        return obj


class WeightedGraph:
    """Immutable undirected weighted graph with per-node port maps.

    Ports at node ``x`` are 1..deg(x) and follow the order in which incident
    edges appear in ``edges``, unless ``port_order`` gives a node's incident
    edge indices explicitly.
    """

    def __init__(self, node_ids, edges, require_connected: bool = True,
                 port_order: dict | None = None):
        ids = [int(x) for x in node_ids]
        if len(set(ids)) != len(ids):
            raise GraphStructureError("node ids must be unique")
        if any(x < 0 for x in ids):
            raise GraphStructureError("node ids must be non-negative")
        self.node_ids: tuple[int, ...] = tuple(ids)
        self.index = {x: i for i, x in enumerate(ids)}
        es = []
        seen_pairs = set()
        for e in edges:
            if not isinstance(e, WeightedEdge):
                e = WeightedEdge(int(e[0]), int(e[1]), int(e[2]))
            if e.u == e.v:
                raise GraphStructureError(f"self-loop at {e.u}")
            if e.u not in self.index or e.v not in self.index:
                raise GraphStructureError(f"edge {e} references unknown node")
            pair = (min(e.u, e.v), max(e.u, e.v))
            if pair in seen_pairs:
                raise GraphStructureError(f"parallel edge {pair}")
            seen_pairs.add(pair)
            es.append(e)
        self.edges: tuple[WeightedEdge, ...] = tuple(es)
        # adjacency[i] = list of (neighbor index, edge index), port p at slot p-1
        adj: list[list[tuple[int, int]]] = [[] for _ in ids]
        for k, e in enumerate(es):
            iu, iv = self.index[e.u], self.index[e.v]
            adj[iu].append((iv, k))
            adj[iv].append((iu, k))
        for x, order in (port_order or {}).items():
            i = self.index[x]
            by_edge = {k: (j, k) for j, k in adj[i]}
            if sorted(order) != sorted(by_edge):
                raise GraphStructureError(f"port order at {x} is not a permutation of its edges")
            adj[i] = [by_edge[k] for k in order]
        self.adjacency = tuple(tuple(a) for a in adj)
        self._csr = None
        self._diameter = None
        if require_connected and not self.is_connected():
            raise GraphStructureError("graph is not connected")

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, x: int) -> int:
        return len(self.adjacency[self.index[x]])

    def port_target(self, x: int, port: int) -> tuple[int, int]:
        """(neighbor id, neighbor's port) reached through ``port`` at ``x``."""
        i = self.index[x]
        j, k = self.adjacency[i][port - 1]
        back = next(p for p, (jj, kk) in enumerate(self.adjacency[j], 1) if kk == k)
        return self.node_ids[j], back

    def neighbors(self, x: int) -> list[int]:
        return [self.node_ids[j] for j, _ in self.adjacency[self.index[x]]]

    def edge_between(self, a: int, b: int) -> WeightedEdge | None:
        ia, ib = self.index[a], self.index[b]
        for j, k in self.adjacency[ia]:
            if j == ib:
                return self.edges[k]
        return None

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR arrays (indptr, indices) over node indices, for the numeric kernels."""
        if self._csr is None:
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            for i, a in enumerate(self.adjacency):
                indptr[i + 1] = indptr[i] + len(a)
            indices = np.empty(indptr[-1], dtype=np.int64)
            pos = 0
            for a in self.adjacency:
                for j, _ in a:
                    indices[pos] = j
                    pos += 1
            self._csr = (indptr, indices)
        return self._csr

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        seen = [False] * self.n
        seen[0] = True
        q = deque([0])
        count = 1
        while q:
            i = q.popleft()
            for j, _ in self.adjacency[i]:
                if not seen[j]:
                    seen[j] = True
                    count += 1
                    q.append(j)
        return count == self.n

    def total_weight(self, edges) -> int:
        return sum(e.w for e in edges)

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self.node_ids == other.node_ids and self.edges == other.edges

    def __hash__(self):
        return hash((self.node_ids, self.edges))

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, m={self.m})"


# ---------------------------------------------------------------- generators

def _distinct_weights(rng: np.random.Generator, m: int, n: int) -> list[int]:
    hi = max(n ** 3, m, 1)
    if m == 0:
        return []
    return [int(x) + 1 for x in rng.choice(hi, size=m, replace=False)]


def generate_random_connected(n: int, m: int, seed: int) -> WeightedGraph:
    """Random connected graph: random recursive spanning tree plus uniform extra edges."""
    if n < 1:
        raise GraphParameterError("n must be at least 1")
    max_m = n * (n - 1) // 2
    if m < n - 1 or m > max_m:
        raise GraphParameterError(f"m={m} infeasible for n={n} (need {n - 1}..{max_m})")
    rng = np.random.default_rng(seed)
    perm = [int(x) for x in rng.permutation(n)]
    pairs = set()
    for i in range(1, n):
        j = int(rng.integers(0, i))
        a, b = perm[i], perm[j]
        pairs.add((min(a, b), max(a, b)))
    extra = m - (n - 1)
    if extra > 0:
        if extra > max_m // 3:
            rest = [(a, b) for a in range(n) for b in range(a + 1, n) if (a, b) not in pairs]
            pick = rng.choice(len(rest), size=extra, replace=False)
            for k in pick:
                pairs.add(rest[int(k)])
        else:
            while len(pairs) < m:
                a, b = (int(x) for x in rng.integers(0, n, size=2))
                if a != b:
                    pairs.add((min(a, b), max(a, b)))
    plist = sorted(pairs)
    order = rng.permutation(len(plist))
    ws = _distinct_weights(rng, m, n)
    edges = [WeightedEdge(plist[int(k)][0], plist[int(k)][1], ws[t]) for t, k in enumerate(order)]
    return WeightedGraph(range(n), edges)


def generate_path(n: int, seed: int | None = None) -> WeightedGraph:
    """Path 0-1-...-(n-1). Weights 1..n-1 in order, or a seeded shuffle of them."""
    if n < 1:
        raise GraphParameterError("n must be at least 1")
    ws = list(range(1, n))
    if seed is not None:
        rng = np.random.default_rng(seed)
        ws = [ws[int(k)] for k in rng.permutation(len(ws))]
    return WeightedGraph(range(n), [WeightedEdge(i, i + 1, ws[i]) for i in range(n - 1)])


def generate_grid(rows: int, cols: int, seed: int) -> WeightedGraph:
    rng = np.random.default_rng(seed)
    pairs = []
    for r in range(rows):
        for c in range(cols):
            x = r * cols + c
            if c + 1 < cols:
                pairs.append((x, x + 1))
            if r + 1 < rows:
                pairs.append((x, x + cols))
    n = rows * cols
    ws = _distinct_weights(rng, len(pairs), n)
    return WeightedGraph(range(n), [WeightedEdge(a, b, w) for (a, b), w in zip(pairs, ws)])


def generate_complete(n: int, seed: int) -> WeightedGraph:
    return generate_random_connected(n, n * (n - 1) // 2, seed)


def generate_caterpillar(spine: int, legs: int, seed: int) -> WeightedGraph:
    """Path of ``spine`` nodes, each spine node carrying ``legs`` pendant nodes."""
    rng = np.random.default_rng(seed)
    pairs = [(i, i + 1) for i in range(spine - 1)]
    nxt = spine
    for i in range(spine):
        for _ in range(legs):
            pairs.append((i, nxt))
            nxt += 1
    ws = _distinct_weights(rng, len(pairs), nxt)
    return WeightedGraph(range(nxt), [WeightedEdge(a, b, w) for (a, b), w in zip(pairs, ws)])


def generate_banded_path(n: int, band: int, extra: int, seed: int) -> WeightedGraph:
    """Path plus ``extra`` random chords joining nodes at most ``band`` apart.

    Keeps the hop diameter close to n/band while adding cycles.
    """
    rng = np.random.default_rng(seed)
    pairs = {(i, i + 1) for i in range(n - 1)}
    tries = 0
    target = min(extra, sum(min(band, n - 1 - i) - 1 for i in range(n - 1)) if band > 1 else 0)
    while len(pairs) < n - 1 + target and tries < 50 * (extra + 1):
        tries += 1
        a = int(rng.integers(0, n))
        b = a + int(rng.integers(2, band + 1)) if band >= 2 else a + 1
        if b < n:
            pairs.add((a, b))
    plist = sorted(pairs)
    ws = _distinct_weights(rng, len(plist), n)
    return WeightedGraph(range(n), [WeightedEdge(a, b, w) for (a, b), w in zip(plist, ws)])


def relabel(g: WeightedGraph, offset: int) -> WeightedGraph:
    """Copy of ``g`` with every node id shifted by ``offset`` (ports preserved)."""
    return WeightedGraph([x + offset for x in g.node_ids],
                         [WeightedEdge(e.u + offset, e.v + offset, e.w) for e in g.edges])


# ---------------------------------------------------------------- diameter

def hop_diameter(g: WeightedGraph, exact_threshold: int = 4096, samples: int = 16,
                 seed: int = 0) -> HopDiameter:
    """Unweighted diameter.

    Exact (all-sources BFS) up to ``exact_threshold`` nodes; above it, the
    largest eccentricity over sampled sources is returned with ``exact=False``
    (it lies within a factor 2 of the true value).
    """
    from . import _kernels

    if not g.is_connected():
        raise GraphStructureError("diameter undefined for a disconnected graph")
    if g.n <= 1:
        return HopDiameter(0, True)
    indptr, indices = g.csr()
    if g.n <= exact_threshold:
        ecc = _kernels.eccentricities(indptr, indices)
        return HopDiameter(int(ecc.max()), True)
    rng = np.random.default_rng(seed)
    srcs = rng.choice(g.n, size=min(samples, g.n), replace=False)
    best = 0
    for s in srcs:
        d = _kernels.bfs_distances(indptr, indices, int(s))
        best = max(best, int(d.max()))
    return HopDiameter(best, False)


# ---------------------------------------------------------------- text format

def dumps(g: WeightedGraph) -> str:
    out = io.StringIO()
    out.write(f"{g.n} {g.m}\n")
    for e in g.edges:
        out.write(f"{e.u} {e.v} {e.w}\n")
    return out.getvalue()


def loads(text: str) -> WeightedGraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GraphStructureError("empty graph file")
    n, m = (int(x) for x in lines[0].split())
    if len(lines) - 1 != m:
        raise GraphStructureError(f"header says {m} edges, found {len(lines) - 1}")
    edges = []
    ids = set()
    for ln in lines[1:]:
        u, v, w = (int(x) for x in ln.split())
        edges.append(WeightedEdge(u, v, w))
        ids.update((u, v))
    if len(ids) > n:
        raise GraphStructureError("more distinct ids than n")
    extra = n - len(ids)
    fill = 0
    while extra:
        if fill not in ids:
            ids.add(fill)
            extra -= 1
        fill += 1
    return WeightedGraph(sorted(ids), edges)


def save(g: WeightedGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(g))


def load(path) -> WeightedGraph:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def ceil_log2(x: float) -> int:
    """Smallest k >= 0 with 2**k >= x."""
    k = 0
    while (1 << k) < x:
        k += 1
    return k
