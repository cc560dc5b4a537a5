"""The middle phase: fragment merging with cover-based leader routes.

Iteration i starts from the level-(i-1) fragments and ends with level i.

1. Lightest edge.  Every fragment convergecasts its lightest outgoing edge
   and its size over its virtual tree.  A fragment is active when it is
   smaller than 2^i * c2 * sqrt(n).  Each active fragment sends a note to
   the inner endpoint of its edge, which hands it across, and the far
   endpoint walks it up to its own leader.  Both leaders now know the edge,
   which serves as the handle of the route between them.
2. Paths.  For k = 2 .. i, both leaders of every unresolved handle send a
   probe up their cluster in each repetition of the level-k cover.  A
   cluster root that sees both sides reports back, the leaders agree on the
   largest (root id, repetition) and install the route along that cluster.
3. Matching.  Over the routes the fragments run the same proposal forest,
   Cole-Vishkin colouring and three request/accept rounds as the base
   phase, with "active" in place of "small".
4. Merge.  Active fragments that did not accept a child add their edge.
   Merged groups have fragment-graph diameter at most three, so three rounds
   of max-id flooding elect the new leader.  The new leader floods an
   install along the routes, which writes the new fragment's up/down
   entries, and each absorbed leader tells its members the new id.
"""
from __future__ import annotations

from ..cghs import CV_STEPS, PALETTE, ExchangeStage, cv_step
from ..cover import build_cover
from ..sim import ProtocolViolation
from ..stages import Stage
from .routing import (MarkEdgeStage, RouteStage, ToEdgeStage, BroadcastStage,
                      UpcastStage, canonical, edge_port)

FL, FP, MT, MG = "findlightest", "findpath", "matching", "merge"
MATCH_CV_STEPS = CV_STEPS


def _leaders(nodes, L):
    for nd in nodes:
        if nd.state.hist.get(L) == nd.node_id:
            yield nd


# ---------------------------------------------------------------- lightest edge

class NoteStage(ToEdgeStage):
    """Active leaders tell the far side of their edge who they are."""

    def at_endpoint(self, node, payload):
        fid, w, x, y = payload
        node.send(edge_port(node.state, w, x, y), ("N", fid, w, x, y))

    def other(self, node, p, msg):
        st = node.state
        if msg[0] == "N":
            _, fid, w, x, y = msg
            self._walk(node, (st.hist[1], 1), fid, w, y, x)
        else:
            _, K, l, fid, w, v, u = msg
            self._walk(node, (K, l), fid, w, v, u)

    def _walk(self, node, s, fid, w, v, u):
        st = node.state
        while True:
            K, l = s
            p = st.up.get(s)
            if p:
                node.send(p, ("IN", K, l, fid, w, v, u))
                return
            if l < self.L:
                s = (st.hist[l + 1], l + 1)
                continue
            h = canonical(w, v, u)
            st.incoming.append((h, fid, 0 if v < u else 1))
            return


def find_lightest(runner, win, i: int, trace=None) -> bool:
    """Run step 1 of iteration i.  Returns True when one fragment spans V."""
    L = i - 1
    nodes = runner.nodes
    for nd in nodes:
        nd.state.frag = nd.state.hist[L]
    runner.run(ExchangeStage(FL), tag=FL)
    runner.run(UpcastStage(L, win.tree_pass(L, FL), FL, "size"), tag=FL)
    spans = False
    for nd in nodes:
        st = nd.state
        st.incoming = []
        st.own = None
        st.active = False
        st.te_payload = None
        st.routes = {}
        st.size = None
    for nd in _leaders(nodes, L):
        st = nd.state
        edge, size = st.fl_result
        st.size = size
        if edge is None:
            spans = True
            continue
        w, x, y = edge
        st.own = (canonical(w, x, y), 0 if x < y else 1)
        st.active = size < win.active_size(i)
        if st.active:
            st.te_payload = (st.id, w, x, y)
    if trace is not None:
        trace.setdefault("active", {})[i] = sum(1 for nd in _leaders(nodes, L) if nd.state.active)
    runner.run(NoteStage(L, win.note_walk(L, FL), FL), tag=FL)
    return spans


# ---------------------------------------------------------------- paths

def _cover_parents(st, k):
    table = st.cover_parent.get(k)
    if table is None:
        table = {rep: pp for rep, _, pp, _, _ in st.covers[k]}
        st.cover_parent[k] = table
    return table


class ProbeStage(Stage):
    """Leaders probe every level-k cluster they belong to, per handle side."""

    tag = FP

    def __init__(self, k: int, window: int):
        self.k = k
        self.window = window

    def start(self, node):
        st = node.state
        st.pr_back = {}
        st.pr_seen = {}
        for h, s in sorted(st.fp_todo):
            for rep in sorted(_cover_parents(st, self.k)):
                self._up(node, h, s, rep, 0)

    def _up(self, node, h, s, rep, came_from):
        st = node.state
        key = (h, s, rep)
        if key in st.pr_back:
            return
        st.pr_back[key] = came_from
        pp = _cover_parents(st, self.k)[rep]
        if pp:
            node.send(pp, ("PR",) + h + (s, rep))
            return
        sides = st.pr_seen.setdefault((h, rep), set())
        sides.add(s)
        if len(sides) == 2:
            for side in (0, 1):
                self._down(node, h, side, rep, st.id)

    def _down(self, node, h, s, rep, root):
        st = node.state
        p = st.pr_back[(h, s, rep)]
        if p:
            node.send(p, ("SU",) + h + (s, rep, root))
        else:
            best = st.fp_choice.get((h, s))
            if best is None or (root, rep) > best:
                st.fp_choice[(h, s)] = (root, rep)

    def on(self, node, inbox):
        for p, msg in inbox:
            h = tuple(msg[1:4])
            if msg[0] == "PR":
                self._up(node, h, msg[4], msg[5], p)
            else:
                self._down(node, h, msg[4], msg[5], msg[6])


class InstallStage(Stage):
    """Leaders write the route of each resolved handle along the chosen cluster."""

    tag = FP

    def __init__(self, k: int, window: int):
        self.k = k
        self.window = window

    def start(self, node):
        st = node.state
        for (h, s), (_, rep) in sorted(st.fp_new.items()):
            self._hop(node, h, s, rep, 0)

    def _hop(self, node, h, s, rep, came_from):
        st = node.state
        pp = _cover_parents(st, self.k)[rep]
        route = st.routes.setdefault(h, [None, None])
        route[s] = came_from
        if route[1 - s] is None:
            route[1 - s] = pp
        if pp:
            node.send(pp, ("IS",) + h + (s, rep))

    def on(self, node, inbox):
        for p, msg in inbox:
            self._hop(node, tuple(msg[1:4]), msg[4], msg[5], p)


def find_paths(runner, win, i: int) -> None:
    """Install a route for every handle an active fragment needs."""
    nodes = runner.nodes
    for nd in nodes:
        st = nd.state
        todo = set()
        if st.active and st.own is not None:
            todo.add(st.own)
        for h, _, side in st.incoming:
            todo.add((h, side))
        st.fp_todo = todo
        st.fp_choice = {}
        if not hasattr(st, "cover_parent"):
            st.cover_parent = {}
    for k in range(2, i + 1):
        runner.run(ProbeStage(k, win.probe(k)), tag=FP)
        for nd in nodes:
            st = nd.state
            st.fp_new = {hs: c for hs, c in st.fp_choice.items() if hs in st.fp_todo}
            st.fp_todo -= set(st.fp_new)
            st.fp_choice = {}
        runner.run(InstallStage(k, win.install(k)), tag=FP)
        for nd in nodes:
            nd.state.fp_new = {}
    for nd in nodes:
        if nd.state.fp_todo:
            raise ProtocolViolation(nd.node_id, 0, f"no cluster holds both leaders of {sorted(nd.state.fp_todo)[0]}")


# ---------------------------------------------------------------- matching

def _send(st, h, side, *payload):
    st.rt_out.append((h, side, payload))


def _status(node, h, side, payload):
    st = node.state
    _, active, fid = payload
    st.target = (bool(active), fid)


def _color(node, h, side, payload):
    node.state.pcolor = payload[1]


def _request(node, h, side, payload):
    st = node.state
    rid = payload[1]
    if st.best_req is None or rid < st.best_req[0]:
        st.best_req = (rid, h, 1 - side)


def _accept(node, h, side, payload):
    st = node.state
    st.matched = True


def compute_maximal_matching(runner, win, i: int) -> None:
    """Proposal forest over handle routes, 3-colouring, and matching."""
    L = i - 1
    nodes = runner.nodes
    leaders = list(_leaders(nodes, L))
    rw = win.route(i, MT)
    for nd in nodes:
        nd.state.rt_out = []
    for nd in leaders:
        st = nd.state
        st.target = None
        for h, fid, side in st.incoming:
            _send(st, h, 1 - side, "st", int(st.active), st.id)
    runner.run(RouteStage(rw, MT, _status), tag=MT)
    for nd in leaders:
        st = nd.state
        st.has_parent = False
        st.kids = []
        if st.active and st.own is not None and st.target is not None:
            t_active, t_id = st.target
            mutual = any(h == st.own[0] for h, _, _ in st.incoming)
            st.has_parent = t_active and not (mutual and st.id > t_id)
        if st.active:
            for h, fid, side in st.incoming:
                if not (st.own is not None and h == st.own[0] and fid > st.id):
                    st.kids.append((h, side))
        st.color = st.id
        st.matched = False
        st.partner = None

    def push_colors():
        for nd in leaders:
            st = nd.state
            st.pcolor = None
            if st.active:
                for h, side in st.kids:
                    _send(st, h, 1 - side, "c", st.color)
        runner.run(RouteStage(rw, MT, _color), tag=MT)

    for _ in range(MATCH_CV_STEPS):
        push_colors()
        for nd in leaders:
            st = nd.state
            if st.active:
                st.color = cv_step(st.color, st.pcolor if st.has_parent else None)
    for c in (5, 4, 3):
        push_colors()
        for nd in leaders:
            st = nd.state
            if st.active:
                st.old_color = st.color
                pc = st.pcolor if st.has_parent else None
                st.color = pc if pc is not None else min(set(PALETTE) - {st.color})
        push_colors()
        for nd in leaders:
            st = nd.state
            if st.active and st.color == c:
                forbid = {st.old_color}
                if st.has_parent and st.pcolor is not None:
                    forbid.add(st.pcolor)
                st.color = min(set(PALETTE) - forbid)
    for c in PALETTE:
        for nd in leaders:
            st = nd.state
            st.best_req = None
            if st.has_parent and not st.matched and st.color == c:
                h, side = st.own
                _send(st, h, 1 - side, "rq", st.id)
        runner.run(RouteStage(rw, MT, _request), tag=MT)
        for nd in leaders:
            st = nd.state
            if st.best_req is not None and not st.matched:
                rid, h, child_side = st.best_req
                st.matched = True
                st.partner = rid
                _send(st, h, child_side, "ac")
        runner.run(RouteStage(rw, MT, _accept), tag=MT)


# ---------------------------------------------------------------- merge

def _mark(node, h, side, payload):
    node.state.marked.add((h, side))


def _max_id(node, h, side, payload):
    st = node.state
    st.mx_next = max(st.mx_next, payload[1])


class MergeInstallStage(Stage):
    """The new leader floods its id along the marked routes.

    Every node on the way records the first port the flood came from as its
    upward entry for the new fragment and acknowledges it, which fills the
    parent's downward entry.  An absorbed leader passes the flood on along
    its other marked handles.
    """

    tag = MG

    def __init__(self, i: int, window: int):
        self.i = i
        self.window = window

    def start(self, node):
        st = node.state
        st.mi_done = False
        if st.marked and st.mx == st.id:
            st.mi_done = True
            self._spread(node, None, st.id)

    def _spread(self, node, skip, new_id):
        st = node.state
        for h, side in sorted(st.marked):
            if h != skip:
                self._forward(node, h, 1 - side, new_id)

    def _forward(self, node, h, side, new_id):
        st = node.state
        p = st.routes[h][side]
        if p:
            node.send(p, ("MI",) + h + (side, new_id))
        elif not st.mi_done:
            st.mi_done = True
            self._spread(node, h, new_id)

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            if msg[0] == "AK":
                st.down.setdefault((msg[1], self.i), set()).add(p)
                continue
            h, side, new_id = tuple(msg[1:4]), msg[4], msg[5]
            key = (new_id, self.i)
            if st.id != new_id and key not in st.up:
                st.up[key] = p
                node.send(p, ("AK", new_id))
            self._forward(node, h, side, new_id)


def merge_step(runner, win, i: int) -> None:
    L = i - 1
    nodes = runner.nodes
    leaders = list(_leaders(nodes, L))
    rw = win.route(i, MG)
    for nd in nodes:
        st = nd.state
        st.hist[i] = st.hist[L]
        st.marked = set()
        st.rt_out = []
        st.te_payload = None
    for nd in leaders:
        st = nd.state
        if st.active and st.own is not None and st.partner is None:
            h, side = st.own
            st.marked.add((h, side))
            _send(st, h, 1 - side, "mk")
            st.te_payload = tuple(h) if side == 0 else (h[0], h[2], h[1])
    runner.run(MarkEdgeStage(L, win.tree_pass(L, MG), MG), tag=MG)
    runner.run(RouteStage(rw, MG, _mark), tag=MG)
    for nd in leaders:
        nd.state.mx = nd.node_id
    for _ in range(3):
        for nd in leaders:
            st = nd.state
            st.mx_next = st.mx
            for h, side in st.marked:
                _send(st, h, 1 - side, "mx", st.mx)
        runner.run(RouteStage(rw, MG, _max_id), tag=MG)
        for nd in leaders:
            nd.state.mx = nd.state.mx_next
    for nd in nodes:
        if nd.state.hist.get(L) != nd.node_id:
            nd.state.marked = set()
            nd.state.mx = None
    runner.run(MergeInstallStage(i, win.merge_install(i)), tag=MG)
    for nd in nodes:
        st = nd.state
        st.bc_value = None
        if st.marked and st.mx != st.id:
            st.bc_value = (st.mx,)
    runner.run(BroadcastStage(L, win.tree_pass(L, MG), MG, hist_level=i), tag=MG)


# ---------------------------------------------------------------- driver

def run_phase2(runner, win, cfg, trace=None, snapshot=None) -> int:
    """Run iterations 2 .. last; returns the level of the final fragments."""
    last = win.phase2_last()
    level = 1
    for i in range(2, last + 1):
        before = dict(runner.metrics.messages_by_tag)
        build_cover(runner, i, win.radius(i), win.d_est, win.kappa, cfg.cover_rep_factor, tag="cover")
        if find_lightest(runner, win, i, trace):
            return level
        find_paths(runner, win, i)
        compute_maximal_matching(runner, win, i)
        merge_step(runner, win, i)
        level = i
        if trace is not None:
            after = runner.metrics.messages_by_tag
            trace.setdefault("iteration_messages", {})[i] = {
                t: after[t] - before.get(t, 0) for t in after if after[t] != before.get(t, 0)}
        if snapshot is not None:
            snapshot(i, runner.nodes)
    return level
