"""Controlled-GHS: Borůvka merging with capped fragment growth.

Iteration i only lets components whose tree depth from their leader is at
most R = 2^i propose their lightest outgoing edge (LOE).  The proposals form
a forest of components.  A maximal matching on that forest is computed with
Cole-Vishkin colour reduction over component leaders.  Matched pairs merge,
and small components left unmatched add their own LOE, which always points
into a matched or a large component.  Every merged group therefore has one
"sink" component (a matched parent or a large component) whose leader stays
in charge, and its depth grows by at most a constant times R per iteration.

All stages run inside the simulator.  Node-level rules:

* a leader floods its fragment tree down to depth R; a node at depth R with
  further tree children marks the component too deep;
* nodes swap fragment ids across non-tree edges whenever their id changed;
* a timed convergecast brings (min outgoing edge key, too-deep flag) to the
  leader, which broadcasts the decision back down;
* the LOE endpoint proposes across the edge; the far side answers with its
  own small flag and id.  If the two LOEs coincide the larger id is the root;
* colours start as leader ids, four Cole-Vishkin steps bring them below 6,
  and three shift-down/recolour steps bring them to {0, 1, 2};
* in colour round c, unmatched colour-c children request their parent,
  which accepts the smallest requesting id.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

from .graph import WeightedEdge, WeightedGraph, ceil_log2
from .sim import DEFAULT_B, ProtocolViolation, RunMetrics, make_nodes
from .stages import NO_EDGE, HelloStage, Runner, Stage, fresh_states

TAG = "cghs"
CV_STEPS = 4          # colours below 2**64 reach {0..5} after four steps
PALETTE = (0, 1, 2)


def iteration_count(n: int, extra: int = 0) -> int:
    """Number of iterations: i = 0 .. ceil(log2 sqrt n) (+ extra)."""
    return ceil_log2(math.sqrt(max(n, 1))) + 1 + extra


def depth_bound(iterations: int) -> int:
    """Upper bound on any fragment's depth from its leader after ``iterations``.

    A merged group hangs off a sink of depth <= R (matched parent) or of the
    previous bound (large component).  Attached small components add at most
    2R + 1 hops each along a chain of two.
    """
    bound = 0
    for i in range(iterations):
        r = 1 << i
        bound = max(5 * r + 2, bound + 2 * r + 1)
    return bound


# ---------------------------------------------------------------- stages

class FloodStage(Stage):
    """Leaders flood their fragment tree down to ``limit`` hops."""

    tag = TAG

    def __init__(self, limit: int):
        self.limit = limit
        self.window = limit + 1

    def start(self, node):
        st = node.state
        st.reached = False
        st.too_deep = False
        st.cut = False
        if st.is_leader:
            st.frag = st.id
            st.parent = 0
            st.depth = 0
            st.reached = True
            st.children = tuple(sorted(st.tree))
            for p in st.children:
                node.send(p, ("F", st.id, 1))

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            _, lid, d = msg
            if st.reached:
                raise ProtocolViolation(st.id, node.round, "fragment tree has a cycle")
            st.frag, st.parent, st.depth, st.reached = lid, p, d, True
            st.children = tuple(sorted(st.tree - {p}))
            if st.children:
                if d < self.limit:
                    for c in st.children:
                        node.send(c, ("F", lid, d + 1))
                else:
                    st.cut = True
                    st.too_deep = True


class ExchangeStage(Stage):
    """Announce a changed fragment id across every live non-tree edge."""

    window = 1

    def __init__(self, tag: str = TAG):
        self.tag = tag

    def start(self, node):
        st = node.state
        if st.frag != st.announced:
            st.announced = st.frag
            for p in node.ports:
                if p not in st.tree and p not in st.dead:
                    node.send(p, ("X", st.frag))

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            st.nbr_frag[p] = msg[1]


def local_outgoing(st):
    """Lightest edge key at this node leading to another fragment (or None)."""
    best = None
    for p, k in st.keys.items():
        if p in st.tree or p in st.dead:
            continue
        f = st.nbr_frag.get(p)
        if f is None:
            continue
        if f == st.frag:
            st.dead.add(p)   # fragments only ever merge, so this stays internal
            continue
        if best is None or k < best:
            best = k
    return best


class ConvergeStage(Stage):
    """Convergecast of (too-deep flag, min outgoing key) to the leader."""

    tag = TAG

    def __init__(self, limit: int):
        self.window = limit + 1

    def start(self, node):
        st = node.state
        st.loe = None
        st.best = None
        if not st.reached:
            return
        st.loe = local_outgoing(st)
        st.waiting = 0 if st.cut else len(st.children)
        if st.waiting == 0:
            self._report(node)

    def _report(self, node):
        st = node.state
        if st.parent:
            k = st.loe if st.loe is not None else NO_EDGE
            node.send(st.parent, ("C", st.too_deep) + tuple(k))

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            _, deep, w, a, b = msg
            st.too_deep = st.too_deep or deep
            if w >= 0 and (st.loe is None or (w, a, b) < st.loe):
                st.loe = (w, a, b)
                st.best = p
            st.waiting -= 1
        if st.waiting == 0:
            self._report(node)


class DecideStage(Stage):
    """The leader broadcasts (small flag, LOE) to every reached member."""

    tag = TAG

    def __init__(self, limit: int):
        self.window = limit + 1

    def start(self, node):
        st = node.state
        st.small = False
        st.lo_port = 0
        st.comp_loe = None
        st.complete = False
        if st.reached and st.parent == 0:
            small = (not st.too_deep) and st.loe is not None
            st.complete = (not st.too_deep) and st.loe is None
            self._take(node, small, st.loe)

    def _take(self, node, small, key):
        st = node.state
        st.small = small
        st.comp_loe = key
        if key is not None:
            st.lo_port = st.port_of_key(key)
        if not st.cut:
            k = key if key is not None else NO_EDGE
            for c in st.children:
                node.send(c, ("D", small) + tuple(k))

    def on(self, node, inbox):
        for _, msg in inbox:
            _, small, w, a, b = msg
            self._take(node, small, (w, a, b) if w >= 0 else None)


class ProposeStage(Stage):
    """Small components propose across their LOE; learn the target's status."""

    tag = TAG

    def __init__(self, limit: int):
        self.window = limit + 3

    def start(self, node):
        st = node.state
        st.cports = []
        st.has_parent = False
        st.matched = False
        st.partner = None
        st.mutual = False
        if st.small and st.lo_port:
            node.send(st.lo_port, ("P", st.frag))

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            kind = msg[0]
            if kind == "P":
                f = msg[1]
                node.send(p, ("Q", st.small, st.frag))
                if st.small:
                    if p == st.lo_port:
                        st.mutual = True
                        if f < st.frag:
                            st.cports.append(p)
                    else:
                        st.cports.append(p)
            elif kind == "Q":
                self._up(node, ("U", msg[1], msg[2], st.mutual))
            else:
                self._up(node, msg)

    def _up(self, node, msg):
        st = node.state
        if st.parent:
            node.send(st.parent, msg)
            return
        _, psmall, pfrag, mutual = msg
        st.has_parent = psmall and not (mutual and st.frag > pfrag)


class ColorStage(Stage):
    """Every small leader learns its matching-forest parent's colour, then
    applies one colour-reduction rule."""

    tag = TAG

    def __init__(self, limit: int, mode: str, target: int = -1):
        self.window = 2 * limit + 3
        self.mode = mode
        self.target = target

    def start(self, node):
        st = node.state
        st.pcolor = None
        if st.small and st.parent == 0 and st.reached:
            self._down(node, st.color)

    def _down(self, node, c):
        st = node.state
        for ch in st.children:
            node.send(ch, ("K", c))
        for p in st.cports:
            node.send(p, ("KX", c))

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            if msg[0] == "K":
                self._down(node, msg[1])
            elif msg[0] == "KX":
                self._up(node, msg[1])
            else:
                self._up(node, msg[1])

    def _up(self, node, c):
        st = node.state
        if st.parent:
            node.send(st.parent, ("KU", c))
        else:
            st.pcolor = c

    def finish(self, node):
        st = node.state
        if not (st.small and st.parent == 0 and st.reached):
            return
        pc = st.pcolor if st.has_parent else None
        if self.mode == "cv":
            st.color = cv_step(st.color, pc)
        elif self.mode == "shift":
            st.old_color = st.color
            st.color = pc if pc is not None else min(set(PALETTE) - {st.color})
        else:
            if st.color == self.target:
                forbid = {st.old_color}
                if pc is not None:
                    forbid.add(pc)
                st.color = min(set(PALETTE) - forbid)


def cv_step(color: int, parent_color: int | None) -> int:
    """One Cole-Vishkin step: index of the lowest differing bit, plus that bit."""
    if parent_color is None:
        return color & 1
    diff = color ^ parent_color
    k = (diff & -diff).bit_length() - 1
    return 2 * k + ((color >> k) & 1)


class RequestStage(Stage):
    """Colour-c unmatched children send a request to their parent's leader,
    which receives the smallest requesting id by a timed convergecast."""

    tag = TAG

    def __init__(self, limit: int, color: int):
        self.limit = limit
        self.color = color
        self.t0 = limit + 2
        self.window = self.t0 + limit

    def start(self, node):
        st = node.state
        st.req_min = None
        st.req_from = 0
        st.req_sent = False
        if (st.small and st.parent == 0 and st.reached and st.has_parent
                and not st.matched and st.color == self.color):
            self._toward_edge(node, st.frag)

    def _toward_edge(self, node, f):
        st = node.state
        if st.best is None:
            node.send(st.lo_port, ("RX", f))
        else:
            node.send(st.best, ("R", f))

    def _slot(self, st):
        return self.t0 + self.limit - st.depth

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            kind, f = msg
            if kind == "R":
                self._toward_edge(node, f)
                continue
            if st.req_min is None or f < st.req_min:
                st.req_min, st.req_from = f, p
            if kind == "RX" and self._slot(st) > node.round:
                node.wake_at(self._slot(st))
        self.tick(node)

    def tick(self, node):
        st = node.state
        if node.round == self._slot(st) and st.req_min is not None and st.parent and not st.req_sent:
            st.req_sent = True
            node.send(st.parent, ("RC", st.req_min))


class AcceptStage(Stage):
    """A parent leader accepts the smallest requester; the answer walks back."""

    tag = TAG

    def __init__(self, limit: int):
        self.window = 2 * limit + 2

    def start(self, node):
        st = node.state
        if st.small and st.parent == 0 and st.reached and not st.matched and st.req_min is not None:
            st.matched = True
            st.partner = st.req_min
            self._follow(node)

    def _follow(self, node):
        st = node.state
        if st.req_from in st.cports:
            node.send(st.req_from, ("AX",))
        else:
            node.send(st.req_from, ("A",))

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            if msg[0] == "A":
                self._follow(node)
            elif st.parent:
                node.send(st.parent, ("AU",))
            else:
                st.matched = True


class MergeStage(Stage):
    """Small components that are not accepting parents add their own LOE."""

    tag = TAG

    def __init__(self, limit: int):
        self.window = limit + 2

    def start(self, node):
        st = node.state
        if st.small and st.parent == 0 and st.reached and st.partner is None and st.comp_loe is not None:
            st.is_leader = False
            self._toward_edge(node)

    def _toward_edge(self, node):
        st = node.state
        if st.best is None:
            st.tree.add(st.lo_port)
            node.send(st.lo_port, ("JX",))
        else:
            node.send(st.best, ("J",))

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            if msg[0] == "J":
                self._toward_edge(node)
            else:
                st.tree.add(p)


# ---------------------------------------------------------------- driver

@dataclass(frozen=True)
class Fragment:
    fragment_id: int
    leader: int
    members: frozenset
    edges: frozenset
    parent: dict = field(default_factory=dict, compare=False, hash=False)   # member -> parent id

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class MstForest:
    fragments: dict                  # fragment id -> Fragment

    @property
    def edges(self) -> frozenset:
        out = set()
        for f in self.fragments.values():
            out |= f.edges
        return frozenset(out)

    def __len__(self) -> int:
        return len(self.fragments)

    def fragment_of(self) -> dict:
        return {x: f.fragment_id for f in self.fragments.values() for x in f.members}


def run_iterations(runner: Runner, n: int, iterations: int) -> int:
    """Execute the iterations and the closing flood; returns the depth bound used."""
    for i in range(iterations):
        r = 1 << i
        runner.run(FloodStage(r))
        runner.run(ExchangeStage())
        runner.run(ConvergeStage(r))
        runner.run(DecideStage(r))
        if all(nd.state.complete for nd in runner.nodes if nd.state.is_leader):
            break
        runner.run(ProposeStage(r))
        for nd in runner.nodes:
            nd.state.color = nd.state.frag
        for _ in range(CV_STEPS):
            runner.run(ColorStage(r, "cv"))
        for c in (5, 4, 3):
            runner.run(ColorStage(r, "shift"))
            runner.run(ColorStage(r, "recolor", c))
        for c in PALETTE:
            runner.run(RequestStage(r, c))
            runner.run(AcceptStage(r))
        runner.run(MergeStage(r))
    bound = depth_bound(iterations)
    runner.run(FloodStage(bound))
    for nd in runner.nodes:
        if nd.state.cut or not nd.state.reached:
            raise ProtocolViolation(nd.node_id, 0, "final flood missed part of a fragment")
    return bound


def collect_forest(g: WeightedGraph, nodes) -> MstForest:
    by_frag: dict[int, list] = {}
    for nd in nodes:
        by_frag.setdefault(nd.state.frag, []).append(nd)
    frags = {}
    for fid, members in by_frag.items():
        edges = set()
        parent = {}
        for nd in members:
            st = nd.state
            for p in st.tree:
                nb = st.nbr[p]
                edges.add(WeightedEdge(min(st.id, nb), max(st.id, nb), nd.weight(p)))
            parent[st.id] = st.nbr[st.parent] if st.parent else None
        frags[fid] = Fragment(fid, fid, frozenset(nd.node_id for nd in members), frozenset(edges), parent)
    return MstForest(frags)


def prepare(g: WeightedGraph, seed: int = 0, B: int = DEFAULT_B) -> Runner:
    nodes = make_nodes(g, seed)
    fresh_states(nodes)
    runner = Runner(g, nodes, seed, B)
    runner.run(HelloStage(), tag=TAG)
    return runner


def controlled_ghs(g: WeightedGraph, seed: int = 0, B: int = DEFAULT_B,
                   extra_iterations: int = 0) -> tuple[MstForest, RunMetrics]:
    """Build the base-fragment forest in the simulator."""
    if g.n == 1:
        nodes = make_nodes(g, seed)
        fresh_states(nodes)
        return collect_forest(g, _mark_single(nodes)), RunMetrics(messages_by_tag={TAG: 0})
    runner = prepare(g, seed, B)
    run_iterations(runner, g.n, iteration_count(g.n, extra_iterations))
    return collect_forest(g, runner.nodes), runner.metrics


def _mark_single(nodes):
    for nd in nodes:
        nd.state.reached = True
    return nodes


# ---------------------------------------------------------------- sequential helpers

class ForestComplete(Exception):
    """The component spans the whole graph: no outgoing edge exists."""


def lightest_outgoing_edge_of_component(component, g: WeightedGraph) -> WeightedEdge:
    comp = set(component)
    best = None
    for x in comp:
        for j, k in g.adjacency[g.index[x]]:
            if g.node_ids[j] not in comp:
                e = g.edges[k]
                if best is None or e.key < best.key:
                    best = e
    if best is None:
        raise ForestComplete("no outgoing edge: the component is the whole graph")
    return best


def matching_merge_step(candidates, components) -> list[frozenset]:
    """Merge components along a maximal matching of the candidate edges, plus
    the lightest candidate of every proposing component left unmatched.

    ``candidates`` are the proposed LOEs; since a component's LOE is its
    lightest outgoing edge, its own proposal is its lightest incident candidate.
    """
    comps = [frozenset(c) for c in components]
    where = {x: i for i, c in enumerate(comps) for x in c}
    cand = sorted({(e.key, where[e.u], where[e.v]) for e in candidates})
    matched = set()
    chosen = []
    for key, a, b in cand:
        if a != b and a not in matched and b not in matched:
            matched.update((a, b))
            chosen.append((a, b))
    for i in range(len(comps)):
        if i in matched:
            continue
        inc = [(key, a, b) for key, a, b in cand if i in (a, b) and a != b]
        if inc:
            _, a, b = min(inc)
            chosen.append((a, b))
    parent = list(range(len(comps)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in chosen:
        parent[find(a)] = find(b)
    groups: dict[int, set] = {}
    for i, c in enumerate(comps):
        groups.setdefault(find(i), set()).update(c)
    return [frozenset(s) for s in groups.values()]
