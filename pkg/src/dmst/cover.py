"""Sparse (κ, W)-neighborhood covers built by exponential start shifts.

One repetition partitions the graph.  Every node v draws an integer shift
δ_v from an exponential distribution with rate β = ln n / (2Wκ), capped at
cap = 4Wκ.  It starts flooding (v, δ_v) at round cap - δ_v.  A node u values
centre c at δ_c - d(c, u), keeps the two best centres and forwards a centre
whenever it enters that top two.  u joins its best centre through the port
the best value came from, so every cluster is a tree of depth <= cap rooted
at its centre.  If the best value beats the second by more than 2W, the
whole W-ball of u joins the same centre, and u counts as covered.

Repetitions are added until every node is covered in at least one of them.
The check runs over the global BFS tree, so the result is Las Vegas.  When W
is at least the diameter estimate, the global BFS tree is itself a valid
cover and is returned without further messages.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import json
import math

import numpy as np

from . import _kernels
from .election import run_election
from .graph import WeightedGraph
from .sim import DEFAULT_B, RunMetrics, make_nodes
from .stages import Runner, Stage, fresh_states

TAG = "cover"
C_DEPTH = 4           # clusters have depth <= C_DEPTH * W * kappa
REP_FACTOR = 2.0      # repetitions = ceil(REP_FACTOR * n^(1/kappa) * ln n)


def default_kappa(n: int) -> int:
    return max(1, math.ceil(math.log2(max(n, 2))))


def shift_cap(W: int, kappa: int) -> int:
    return C_DEPTH * W * kappa


def repetitions(n: int, kappa: int, factor: float = REP_FACTOR) -> int:
    return max(1, math.ceil(factor * n ** (1.0 / kappa) * math.log(max(n, 2))))


# ---------------------------------------------------------------- stages

class ShiftFloodStage(Stage):
    """One repetition: shifted floods with top-two forwarding."""

    tag = TAG

    def __init__(self, cap: int, W: int, beta: float):
        self.cap = cap
        self.W = W
        self.beta = beta
        self.window = cap + 4

    def start(self, node):
        st = node.state
        d = min(self.cap, int(node.rng.exponential(1.0 / self.beta)))
        st.sh_delta = d
        st.sh_cand = [(d, st.id, 0, d)]       # (value, centre, port, centre's shift)
        st.sh_own_sent = False
        if d == self.cap:
            self._send_own(node)
        else:
            node.wake_at(self.cap - d)

    def _send_own(self, node):
        st = node.state
        st.sh_own_sent = True
        if st.sh_delta >= 1 and any(c[1] == st.id for c in st.sh_cand):
            node.send_all(("S", st.id, st.sh_delta, st.sh_delta))

    def tick(self, node):
        st = node.state
        if not st.sh_own_sent and node.round == self.cap - st.sh_delta:
            self._send_own(node)

    def on(self, node, inbox):
        st = node.state
        for p, msg in sorted(inbox):
            _, c, val, dc = msg
            v = val - 1
            cand = st.sh_cand
            old = next((x for x in cand if x[1] == c), None)
            if old is not None:
                if old[0] >= v:
                    continue
                cand.remove(old)
            cand.append((v, c, p, dc))
            cand.sort(key=lambda x: (-x[0], x[1]))
            del cand[2:]
            if any(x[1] == c for x in cand) and v >= 1:
                node.send_all(("S", c, v, dc), exclude=(p,))
        self.tick(node)

    def finish(self, node):
        st = node.state
        v1, c, port, dc = st.sh_cand[0]
        v2 = st.sh_cand[1][0] if len(st.sh_cand) > 1 else -1
        st.sh_result = (c, port, dc - v1, v1 - max(v2, -1) > 2 * self.W)


class JoinStage(Stage):
    """Children announce themselves to their cluster parent."""

    tag = TAG
    window = 1

    def __init__(self, key, rep: int):
        self.key = key
        self.rep = rep

    def start(self, node):
        st = node.state
        st.sh_children = []
        if st.sh_result[1]:
            node.send(st.sh_result[1], ("J",))

    def on(self, node, inbox):
        node.state.sh_children.extend(p for p, _ in inbox)

    def finish(self, node):
        st = node.state
        c, parent, depth, covered = st.sh_result
        st.covers.setdefault(self.key, []).append(
            (self.rep, c, parent, tuple(sorted(st.sh_children)), depth))
        st.cov_ok = st.cov_ok or covered


class TreeAndStage(Stage):
    """Timed convergecast of a boolean AND over the global BFS tree."""

    tag = TAG

    def __init__(self, height: int, attr: str, out: str):
        self.h = height
        self.attr = attr
        self.out = out
        self.window = height + 1

    def start(self, node):
        st = node.state
        st.tree_and = bool(getattr(st, self.attr))
        slot = self.h - st.bfs_depth
        if slot == 0:
            self._send(node)
        elif slot > 0:
            node.wake_at(slot)

    def _send(self, node):
        st = node.state
        if st.bfs_parent:
            node.send(st.bfs_parent, ("A", st.tree_and))

    def on(self, node, inbox):
        st = node.state
        for _, msg in inbox:
            st.tree_and = st.tree_and and msg[1]
        if node.round == self.h - st.bfs_depth:
            self._send(node)

    def tick(self, node):
        self._send(node)

    def finish(self, node):
        st = node.state
        if not st.bfs_parent:
            setattr(st, self.out, st.tree_and)


class TreeBroadcastStage(Stage):
    """The BFS root pushes one attribute value to every node."""

    def __init__(self, height: int, attr: str, tag: str = TAG):
        self.attr = attr
        self.tag = tag
        self.window = height + 1

    def start(self, node):
        st = node.state
        if not st.bfs_parent:
            self._push(node, getattr(st, self.attr))

    def _push(self, node, value):
        st = node.state
        setattr(st, self.attr, value)
        for c in st.bfs_children:
            node.send(c, ("V", value))

    def on(self, node, inbox):
        for _, msg in inbox:
            self._push(node, msg[1])


def build_cover(runner: Runner, key, W: int, d_est: int, kappa: int | None = None,
                rep_factor: float = REP_FACTOR, tag: str = TAG) -> dict:
    """Build a cover into ``state.covers[key]`` at every node.

    Needs the global BFS tree (``run_election``).  Returns a small summary.
    """
    n = runner.g.n
    kappa = kappa or default_kappa(n)
    for nd in runner.nodes:
        if not hasattr(nd.state, "covers"):
            nd.state.covers = {}
        nd.state.covers[key] = []
    if W >= d_est:
        for nd in runner.nodes:
            st = nd.state
            st.covers[key].append((0, st.bfs_root, st.bfs_parent, tuple(st.bfs_children), st.bfs_depth))
        return {"global_tree": True, "reps": 1, "depth_cap": d_est // 2, "kappa": kappa}
    cap = shift_cap(W, kappa)
    beta = math.log(max(n, 2)) / (2 * W * kappa)
    height = d_est // 2
    for nd in runner.nodes:
        nd.state.cov_ok = False
    reps = 0
    target = repetitions(n, kappa, rep_factor)
    while True:
        while reps < target:
            runner.run(ShiftFloodStage(cap, W, beta), tag=tag)
            runner.run(JoinStage(key, reps), tag=tag)
            reps += 1
        runner.run(TreeAndStage(height, "cov_ok", "cov_all"), tag=tag)
        runner.run(TreeBroadcastStage(height, "cov_all", tag=tag), tag=tag)
        if runner.nodes[0].state.cov_all:
            break
        target += 1
    return {"global_tree": False, "reps": reps, "depth_cap": cap, "kappa": kappa}


# ---------------------------------------------------------------- cover objects

@dataclass
class ClusterTree:
    cluster_id: int
    root: int
    parent: dict            # member id -> parent id (None at the root)
    ports: dict             # member id -> (parent port, child ports)
    depth: int = 0

    @property
    def members(self) -> frozenset:
        return frozenset(self.parent)


@dataclass
class Cover:
    W: int
    kappa: int
    clusters: list
    membership: dict = field(default_factory=dict)   # node id -> list of cluster ids
    info: dict = field(default_factory=dict)

    def to_json(self) -> str:
        out = {"W": self.W, "kappa": self.kappa, "clusters": [
            {"id": c.cluster_id, "root": c.root, "depth": c.depth,
             "ports": {str(x): [pp, list(ch)] for x, (pp, ch) in sorted(c.ports.items())}}
            for c in self.clusters]}
        return json.dumps(out, sort_keys=True)


def collect_cover(g: WeightedGraph, nodes, key, W: int, kappa: int, info=None) -> Cover:
    groups: dict[tuple, dict] = {}
    for nd in nodes:
        for rep, centre, pp, ch, depth in nd.state.covers[key]:
            grp = groups.setdefault((rep, centre), {"parent": {}, "ports": {}, "depth": 0})
            grp["parent"][nd.node_id] = g.port_target(nd.node_id, pp)[0] if pp else None
            grp["ports"][nd.node_id] = (pp, tuple(ch))
            grp["depth"] = max(grp["depth"], depth)
    clusters = []
    membership: dict[int, list] = {x: [] for x in g.node_ids}
    for cid, ((rep, centre), grp) in enumerate(sorted(groups.items())):
        clusters.append(ClusterTree(cid, centre, grp["parent"], grp["ports"], grp["depth"]))
        for x in grp["parent"]:
            membership[x].append(cid)
    return Cover(W, kappa, clusters, membership, dict(info or {}))


def compute_cover(g: WeightedGraph, W: int, seed: int = 0, kappa: int | None = None,
                  rep_factor: float = REP_FACTOR, B: int = DEFAULT_B) -> tuple[Cover, RunMetrics]:
    """Elect a leader (for the global tree), then build and return a cover."""
    if W < 1:
        raise ValueError("W must be at least 1")
    nodes = make_nodes(g, seed)
    fresh_states(nodes)
    runner = Runner(g, nodes, seed, B)
    d_est = run_election(runner)
    kappa = kappa or default_kappa(g.n)
    info = build_cover(runner, 0, W, d_est, kappa, rep_factor)
    return collect_cover(g, nodes, 0, W, kappa, info), runner.metrics


# ---------------------------------------------------------------- verification

@dataclass
class CoverReport:
    depth_ok: bool
    sparsity_ok: bool
    neighborhood_ok: bool
    trees_ok: bool
    max_depth: int
    depth_bound: float
    max_membership: int
    sparsity_bound: float
    deepest_cluster: int | None = None
    busiest_node: int | None = None
    uncovered: list = field(default_factory=list)
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.depth_ok and self.sparsity_ok and self.neighborhood_ok and self.trees_ok


def sparsity_bound(n: int, kappa: int, c_sparse: float) -> float:
    return c_sparse * kappa * n ** (1.0 / kappa) * math.log2(max(n, 2))


def verify_cover(cover: Cover, g: WeightedGraph, c_depth: float = C_DEPTH,
                 c_sparse: float = 1.0) -> CoverReport:
    """Check tree shape, depth, sparsity and W-ball containment exactly."""
    n = g.n
    problems = []
    idx = g.index
    trees_ok = True
    max_depth, deepest = 0, None
    for c in cover.clusters:
        depth = 0
        for x in c.parent:
            hops, y, seen = 0, x, set()
            while c.parent.get(y) is not None:
                if y in seen:
                    break
                seen.add(y)
                nxt = c.parent[y]
                if nxt not in c.parent or g.edge_between(y, nxt) is None:
                    trees_ok = False
                    problems.append(f"cluster {c.cluster_id}: bad parent link {y}->{nxt}")
                    break
                y = nxt
                hops += 1
            if y != c.root:
                trees_ok = False
                problems.append(f"cluster {c.cluster_id}: {x} does not reach root {c.root}")
            depth = max(depth, hops)
        if depth > max_depth:
            max_depth, deepest = depth, c.cluster_id
    d_bound = c_depth * cover.W * cover.kappa
    counts = {x: len(cover.membership.get(x, ())) for x in g.node_ids}
    busiest = max(counts, key=counts.get) if counts else None
    s_bound = sparsity_bound(n, cover.kappa, c_sparse)
    indptr, indices = g.csr()
    dist = _kernels.all_pairs_distances(indptr, indices)
    ball = (dist >= 0) & (dist <= cover.W)
    inside = np.zeros((len(cover.clusters), n), dtype=np.float32)
    for c in cover.clusters:
        inside[c.cluster_id, [idx[x] for x in c.members]] = 1.0
    # missing[v, c] = number of nodes of ball(v) outside cluster c
    missing = ball.astype(np.float32) @ (1.0 - inside).T
    good = (missing == 0).any(axis=1) if len(cover.clusters) else np.zeros(n, dtype=bool)
    uncovered = [g.node_ids[i] for i in np.flatnonzero(~good)]
    return CoverReport(
        depth_ok=max_depth <= d_bound, sparsity_ok=counts[busiest] <= s_bound if counts else True,
        neighborhood_ok=not uncovered, trees_ok=trees_ok, max_depth=max_depth, depth_bound=d_bound,
        max_membership=counts[busiest] if counts else 0, sparsity_bound=s_bound,
        deepest_cluster=deepest, busiest_node=busiest, uncovered=uncovered, problems=problems)
