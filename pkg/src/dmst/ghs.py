"""Classic synchronous GHS: uncontrolled Borůvka merging of fragments.

Each phase every fragment finds its lightest outgoing edge by a convergecast
over its tree, the leader sends a connect order to the edge's inner
endpoint, and the endpoint connects across.  The merged fragment is a tree
of old fragments with exactly one edge chosen from both sides; its larger
endpoint becomes the new leader and floods its id through the new tree.

Steps end by quiescence: the next step starts the round after the last
message of the previous one.  The baseline therefore pays nothing for
knowing when a step is over, which only flatters its round count.
"""
from __future__ import annotations

from .cghs import ExchangeStage, local_outgoing
from .graph import WeightedEdge, WeightedGraph
from .oracle import MstResult
from .sim import DEFAULT_B, RunMetrics, make_nodes
from .stages import HelloStage, Runner, Stage, fresh_states

TAG = "ghs"
OPEN = 10 ** 9


class _Open(Stage):
    tag = TAG
    window = OPEN


class ConvergecastStage(_Open):
    """Children report (min key, via) to the parent once all of theirs did."""

    def start(self, node):
        st = node.state
        st.loe = local_outgoing(st)
        st.best = "own" if st.loe is not None else None
        st.waiting = len(st.children)
        if st.waiting == 0:
            self._report(node)

    def _report(self, node):
        st = node.state
        if st.parent:
            k = st.loe if st.loe is not None else (-1, -1, -1)
            node.send(st.parent, ("C",) + tuple(k))
        else:
            st.complete = st.loe is None

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            k = tuple(msg[1:])
            if k[0] >= 0 and (st.loe is None or k < st.loe):
                st.loe, st.best = k, p
            st.waiting -= 1
        if st.waiting == 0:
            self._report(node)


class ConnectStage(_Open):
    """The leader's order walks to the inner endpoint, which connects across."""

    def start(self, node):
        st = node.state
        st.sent_connect = 0
        st.got_connect = set()
        if st.parent == 0 and not st.complete:
            self._order(node)

    def _order(self, node):
        st = node.state
        if st.best == "own":
            p = st.port_of_key(st.loe)
            st.tree.add(p)
            st.sent_connect = p
            node.send(p, ("CN",))
        else:
            node.send(st.best, ("D",))

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            if msg[0] == "D":
                self._order(node)
            else:
                st.tree.add(p)
                st.got_connect.add(p)

    def finish(self, node):
        st = node.state
        # the edge chosen from both sides is the core; its larger end leads
        p = st.sent_connect
        st.new_leader = bool(p) and p in st.got_connect and st.id > st.nbr[p]


class ReorientStage(_Open):
    """New leaders flood their id over the tree; parents follow the flood."""

    def start(self, node):
        st = node.state
        st.reached = False
        if st.new_leader:
            self._take(node, 0, st.id)

    def _take(self, node, p, lid):
        st = node.state
        st.reached = True
        st.frag = lid
        st.parent = p
        st.children = tuple(sorted(q for q in st.tree if q != p))
        for q in st.children:
            node.send(q, ("NL", lid))

    def on(self, node, inbox):
        st = node.state
        if not st.reached:
            p, msg = inbox[0]
            self._take(node, p, msg[1])


def ghs_classic(g: WeightedGraph, seed: int = 0, B: int = DEFAULT_B) -> tuple[MstResult, RunMetrics]:
    """Run the baseline in the simulator; returns the tree and its metrics."""
    nodes = make_nodes(g, seed)
    fresh_states(nodes)
    if g.n == 1:
        return MstResult(frozenset(), 0, "ghs"), RunMetrics(messages_by_tag={TAG: 0})
    runner = Runner(g, nodes, seed, B)
    runner.run(HelloStage(), tag=TAG)
    for nd in nodes:
        nd.state.complete = False
    while True:
        runner.run_open(ExchangeStage(TAG), tag=TAG)
        runner.run_open(ConvergecastStage(), tag=TAG)
        if any(nd.state.complete for nd in nodes if nd.state.parent == 0):
            break
        runner.run_open(ConnectStage(), tag=TAG)
        runner.run_open(ReorientStage(), tag=TAG)
    edges = set()
    for nd in nodes:
        st = nd.state
        for p in st.tree:
            nb = st.nbr[p]
            edges.add(WeightedEdge(min(st.id, nb), max(st.id, nb), nd.weight(p)))
    return MstResult(frozenset(edges), sum(e.w for e in edges), "ghs"), runner.metrics
