"""The final phase: Borůvka over few fragments, decided at the BFS root.

The fragments left after the middle phase are the units.  Units carry a
class label (initially their own id).  Each round:

* every unit finds its lightest edge to a different class over its virtual
  tree, and its leader sends (unit, label, edge, far label) to the BFS root;
* the root picks each class's lightest edge, joins the classes with
  union-find and names every merged class after its smallest label;
* the root sends every unit its new label and whether its edge was picked,
  picked edges are added at their endpoints and units relabel their members.

The number of classes at least halves per round, so O(log n) rounds suffice,
and each round costs O(D + number of units) on the pipelined BFS tree.
"""
from __future__ import annotations

import math

from ..cghs import ExchangeStage
from ..cover import TreeBroadcastStage
from ..stages import Stage
from .routing import BroadcastStage, MarkEdgeStage, UpcastStage, canonical

TAG = "phase3"


class ItemUpcastStage(Stage):
    """Unit leaders send their item to the BFS root, pipelined.

    Each node closes its subtree with an end marker once all of its BFS
    children have closed theirs.  Per-port FIFO order puts the marker after
    every item sent on that port.
    """

    tag = TAG

    def __init__(self, window: int):
        self.window = window

    def start(self, node):
        st = node.state
        st.p3_back = {}
        st.p3_items = []
        st.p3_open = len(st.bfs_children)
        if st.p3_item is not None:
            self._take(node, st.p3_item, 0)
        self._maybe_close(node)

    def _take(self, node, item, came_from):
        st = node.state
        st.p3_back[item[0]] = came_from
        if st.bfs_parent:
            node.send(st.bfs_parent, ("I",) + tuple(item))
        else:
            st.p3_items.append(tuple(item))

    def _maybe_close(self, node):
        st = node.state
        if st.p3_open == 0:
            st.p3_open = -1
            if st.bfs_parent:
                node.send(st.bfs_parent, ("IE",))
            else:
                st.p3_closed = True

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            if msg[0] == "I":
                self._take(node, msg[1:], p)
            else:
                st.p3_open -= 1
        self._maybe_close(node)


class DecisionDowncastStage(Stage):
    """The root returns (unit, new label, picked) to every unit leader."""

    tag = TAG

    def __init__(self, window: int):
        self.window = window

    def start(self, node):
        st = node.state
        st.p3_reply = None
        for reply in getattr(st, "p3_out", None) or []:
            self._route(node, reply)
        st.p3_out = []

    def _route(self, node, reply):
        st = node.state
        p = st.p3_back[reply[0]]
        if p:
            node.send(p, ("O",) + tuple(reply))
        else:
            st.p3_reply = tuple(reply)

    def on(self, node, inbox):
        for _, msg in inbox:
            self._route(node, msg[1:])


def boruvka_decide(items):
    """items: (unit, label, w, x, y, far label).  Returns (replies, classes before, after)."""
    parent = {}

    def find(a):
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    best = {}
    for it in items:
        unit, label, w, x, y, olabel = it
        k = canonical(w, x, y)
        if label not in best or k < best[label][0]:
            best[label] = (k, unit)
        find(label)
        find(olabel)
    before = len(parent)
    picked = set()
    for label, (k, unit) in best.items():
        picked.add(unit)
        olabel = next(it[5] for it in items if it[0] == unit)
        ra, rb = find(label), find(olabel)
        if ra != rb:
            lo, hi = min(ra, rb), max(ra, rb)
            parent[hi] = lo
    after = len({find(a) for a in parent})
    replies = [(it[0], find(it[1]), int(it[0] in picked)) for it in items]
    return sorted(replies), before, after


def run_phase3(runner, win, level: int, trace=None) -> int:
    """Join the level-``level`` fragments into one tree; returns the round count."""
    nodes = runner.nodes
    units = math.ceil(math.sqrt(win.n)) + 1
    root = next(nd for nd in nodes if not nd.state.bfs_parent)
    for nd in nodes:
        nd.state.label = nd.state.hist[level]
        nd.state.p3_done = False
    counts = []
    rounds = 0
    while True:
        rounds += 1
        for nd in nodes:
            nd.state.frag = nd.state.label
        runner.run(ExchangeStage(TAG), tag=TAG)
        runner.run(UpcastStage(level, win.tree_pass(level, TAG), TAG, "label"), tag=TAG)
        for nd in nodes:
            st = nd.state
            st.p3_item = None
            st.p3_closed = False
            if st.hist.get(level) == st.id and st.fl_result[0] is not None:
                edge, olabel = st.fl_result
                st.p3_item = (st.id, st.label) + tuple(edge) + (olabel,)
        runner.run(ItemUpcastStage(win.bfs_pipeline(units)), tag=TAG)
        rst = root.state
        replies, before, after = boruvka_decide(rst.p3_items)
        counts.append((before, after))
        rst.p3_out = replies
        rst.p3_done = after <= 1
        runner.run(DecisionDowncastStage(win.bfs_pipeline(units)), tag=TAG)
        for nd in nodes:
            st = nd.state
            st.te_payload = None
            st.bc_value = None
            if st.p3_reply is not None:
                _, new_label, picked = st.p3_reply
                st.bc_value = (new_label,)
                if picked:
                    st.te_payload = st.fl_result[0]
        runner.run(MarkEdgeStage(level, win.tree_pass(level, TAG), TAG), tag=TAG)
        runner.run(BroadcastStage(level, win.tree_pass(level, TAG), TAG, attr="label"), tag=TAG)
        runner.run(TreeBroadcastStage(win.bfs_height, "p3_done", tag=TAG), tag=TAG)
        if root.state.p3_done:
            break
    if trace is not None:
        trace["phase3_classes"] = counts
    return rounds
