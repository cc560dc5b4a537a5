"""Leader election with a BFS tree and a 2-approximation of the diameter.

Every node draws a random rank and starts an echo wave keyed by (rank, id).
A node joins the largest wave it has seen and forwards it once; smaller
waves die out.  A node answers its wave parent when every other port has
delivered either the same wave or an echo for it.  Only the globally largest
wave completes, and because each node sends at most one message per port
per round, that wave travels one hop per round and its tree is a BFS tree.
Echoes carry the subtree height, so the winner learns its eccentricity e
and announces D̃ = 2e (D <= D̃ <= 2D) down the tree.

Random ranks keep the expected number of wave switches per node
logarithmic.  Plain max-id flooding can switch a linear number of times on
unlucky id layouts.
"""
from __future__ import annotations

from .graph import WeightedGraph
from .sim import DEFAULT_B, make_nodes
from .stages import Runner, fresh_states

TAG = "election"
RANK_BITS = 62


class ElectionProtocol:
    tag = TAG

    def init(self, node):
        st = node.state
        rank = int(node.rng.integers(0, 1 << RANK_BITS))
        st.el_key = (rank, node.node_id)
        st.el_done = False
        self._adopt(node, st.el_key, 0, -1)
        self._check(node)

    def _adopt(self, node, key, parent, depth_of_parent):
        st = node.state
        st.el_key = key
        st.bfs_parent = parent
        st.bfs_depth = depth_of_parent + 1
        st.el_pending = set(p for p in node.ports if p != parent)
        st.bfs_children = []
        st.el_height = st.bfs_depth
        st.el_echoed = False
        for p in sorted(st.el_pending):
            node.send(p, ("E", key[0], key[1], st.bfs_depth))

    def step(self, node, inbox):
        st = node.state
        if st.el_done:
            node.halt()
            return
        best = None
        for p, msg in inbox:
            if msg[0] == "E":
                k = (msg[1], msg[2])
                if k > st.el_key and (best is None or k > best[0] or (k == best[0] and p < best[1])):
                    best = (k, p, msg[3])
        if best is not None:
            self._adopt(node, best[0], best[1], best[2])
        for p, msg in inbox:
            kind = msg[0]
            if kind == "DONE":
                self._finish(node, msg[1])
                return
            if (msg[1], msg[2]) != st.el_key or p == st.bfs_parent:
                continue
            st.el_pending.discard(p)
            if kind == "C":
                st.bfs_children.append(p)
                st.el_height = max(st.el_height, msg[3])
        self._check(node)

    def _check(self, node):
        st = node.state
        if st.el_pending or st.el_echoed:
            return
        st.el_echoed = True
        if st.bfs_parent:
            node.send(st.bfs_parent, ("C", st.el_key[0], st.el_key[1], st.el_height))
        else:
            self._finish(node, 2 * st.el_height)

    def _finish(self, node, d_est):
        st = node.state
        st.el_done = True
        st.d_est = d_est
        st.bfs_children.sort()
        st.bfs_root = st.el_key[1]
        for c in st.bfs_children:
            node.send(c, ("DONE", d_est))
        node.halt()

    def output(self, node):
        return node.state.d_est


def run_election(runner: Runner) -> int:
    """Elect a leader and build the global BFS tree; returns D̃."""
    runner.run_open(ElectionProtocol(), tag=TAG)
    d_est = {nd.state.d_est for nd in runner.nodes}
    if len(d_est) != 1:
        raise RuntimeError("nodes disagree on the diameter estimate")
    return d_est.pop()


def estimate_diameter(g: WeightedGraph, seed: int = 0, B: int = DEFAULT_B):
    """Returns (D̃, leader id, RunMetrics)."""
    nodes = make_nodes(g, seed)
    fresh_states(nodes)
    runner = Runner(g, nodes, seed, B)
    d = run_election(runner)
    root = next(nd.node_id for nd in nodes if nd.state.bfs_parent == 0 and nd.state.bfs_depth == 0)
    return d, root, runner.metrics
