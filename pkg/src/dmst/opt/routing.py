"""Routing tables and the virtual trees they induce.

Every node keeps ``up[(K, l)] -> port`` and ``down[(K, l)] -> ports`` for
fragment ids K at level l, plus ``hist[l]``, the id of its own fragment at
level l.  Entries are never deleted or re-keyed: a level-l fragment keeps
its id at that level, and a node that relays for several fragments simply
holds several keys.

A member x of a fragment reaches the current leader by an upward walk.  At
level l with key K it follows ``up[(K, l)]`` when defined.  Otherwise x
leads K at that level and the walk moves to level l + 1 with key
``hist[l + 1]``.  Convergecasts run on the tree of "slots" (node, K, l) that
these walks define.  A slot waits for its down-ports and for the slot one
level below at the same node (if that node leads there), then reports to
its parent slot.  Leadership is downward closed: the leader of a level-l
fragment led one of its level-(l-1) parts, so ``hist[l] == node id`` marks
exactly the levels a node leads.

Handle routes between leaders live in ``routes[h] = [port to side 0,
port to side 1]``.  Port 0 means "this node is that side's leader".
"""
from __future__ import annotations

from ..sim import ProtocolViolation
from ..stages import Stage

OWN = "own"
INNER = "int"


def init_phase1(nodes) -> None:
    """Turn the final Controlled-GHS flood into level-1 routing entries."""
    for nd in nodes:
        st = nd.state
        st.hist = {1: st.frag}
        st.up = {}
        st.down = {}
        if st.parent:
            st.up[(st.frag, 1)] = st.parent
        if st.children:
            st.down[(st.frag, 1)] = set(st.children)
        st.routes = {}
        st.fl_best = {}


def top_level(st, L: int) -> int:
    """Highest level <= L at which this node is the fragment leader (0 if none)."""
    t = 0
    for l in range(1, L + 1):
        if st.hist.get(l) == st.id:
            t = l
        else:
            break
    return t


def virtual_slots(st, L: int) -> dict:
    """(K, l) -> [parent port or None, has internal parent, internal child, own input]."""
    top = top_level(st, L)
    keys = {k for k in st.up if k[1] <= L}
    for l in range(1, min(top + 1, L) + 1):
        keys.add((st.hist[l], l))
    out = {}
    for K, l in keys:
        parent = st.up.get((K, l))
        internal_parent = parent is None and l < L
        if parent is None and not (K == st.hist.get(l) == st.id):
            raise ProtocolViolation(st.id, 0, f"slot {(K, l)} has no way up")
        own = l == 1 and K == st.hist[1]
        inner = l >= 2 and K == st.hist.get(l) and st.hist.get(l - 1) == st.id
        out[(K, l)] = [parent, internal_parent, inner, own]
    return out


def canonical(w, x, y):
    return (w, x, y) if x < y else (w, y, x)


def local_candidate(st):
    """Lightest edge at this node to a node with a different ``frag`` value.

    Returns ((w, own id, neighbour id), neighbour's value) or (None, None).
    Ports already seen to carry the same value are retired for good.
    """
    best, best_port = None, 0
    for p, k in st.keys.items():
        if p in st.tree or p in st.dead:
            continue
        f = st.nbr_frag.get(p)
        if f is None:
            continue
        if f == st.frag:
            st.dead.add(p)
            continue
        if best is None or k < best:
            best, best_port = k, p
    if best is None:
        return None, None
    return (best[0], st.id, st.nbr[best_port]), st.nbr_frag[best_port]


class UpcastStage(Stage):
    """Convergecast of the lightest outgoing edge over each virtual tree.

    ``mode="size"`` also sums member counts; ``mode="label"`` carries the far
    side's value of the winning edge.  Edge triples are oriented (w, inner
    endpoint, outer endpoint) and compared by their canonical key.
    """

    def __init__(self, L: int, window: int, tag: str, mode: str = "size"):
        self.L = L
        self.window = window
        self.tag = tag
        self.mode = mode

    def start(self, node):
        st = node.state
        slots = virtual_slots(st, self.L)
        st.slots = {}
        st.fl_best = {}
        st.fl_result = None
        for s, (parent, ip, inner, own) in slots.items():
            st.slots[s] = [len(st.down.get(s, ())) + (1 if inner else 0), None, 0, None, parent, ip]
        for s, rec in st.slots.items():
            if rec[3 + 0] is None and slots[s][3]:
                edge, far = local_candidate(st)
                rec[1] = edge
                rec[2] = 1 if self.mode == "size" else (far if far is not None else -1)
                rec[3] = OWN
        for s in sorted(st.slots, key=lambda s: s[1]):
            if st.slots[s][0] == 0:
                self._ready(node, s)

    def _merge(self, rec, edge, aux, via):
        if self.mode == "size":
            rec[2] += aux
        if edge is not None and (rec[1] is None or canonical(*edge) < canonical(*rec[1])):
            rec[1] = edge
            rec[3] = via
            if self.mode != "size":
                rec[2] = aux

    def _ready(self, node, s):
        st = node.state
        rec = st.slots[s]
        st.fl_best[s] = rec[3]
        K, l = s
        edge = rec[1] if rec[1] is not None else (-1, -1, -1)
        if rec[4]:
            node.send(rec[4], ("L", K, l) + tuple(edge) + (rec[2],))
        elif rec[5]:
            ps = (st.hist[l + 1], l + 1)
            prec = st.slots[ps]
            self._merge(prec, rec[1], rec[2], INNER)
            prec[0] -= 1
            if prec[0] == 0:
                self._ready(node, ps)
        else:
            st.fl_result = (rec[1], rec[2])

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            _, K, l, w, x, y, aux = msg
            rec = st.slots[(K, l)]
            self._merge(rec, (w, x, y) if w >= 0 else None, aux, p)
            rec[0] -= 1
            if rec[0] == 0:
                self._ready(node, (K, l))


class ToEdgeStage(Stage):
    """Leaders with ``te_payload`` set send it down the recorded best path to
    the inner endpoint of their lightest edge; subclasses act there."""

    def __init__(self, L: int, window: int, tag: str):
        self.L = L
        self.window = window
        self.tag = tag

    def start(self, node):
        st = node.state
        payload = getattr(st, "te_payload", None)
        st.te_payload = None
        if payload is not None and st.hist.get(self.L) == st.id:
            self._descend(node, (st.id, self.L), payload)

    def _descend(self, node, s, payload):
        st = node.state
        while True:
            b = st.fl_best.get(s)
            if b == OWN:
                self.at_endpoint(node, payload)
                return
            if b == INNER:
                s = (st.hist[s[1] - 1], s[1] - 1)
                continue
            if not b:
                raise ProtocolViolation(st.id, node.round, f"no best pointer for {s}")
            node.send(b, ("T",) + s + tuple(payload))
            return

    def on(self, node, inbox):
        for p, msg in inbox:
            if msg[0] == "T":
                self._descend(node, (msg[1], msg[2]), msg[3:])
            else:
                self.other(node, p, msg)

    def at_endpoint(self, node, payload):
        raise NotImplementedError

    def other(self, node, p, msg):
        raise NotImplementedError


def edge_port(st, w, a, b):
    p = st.port_of_key(canonical(w, a, b))
    if not p:
        raise ProtocolViolation(st.id, 0, f"edge {(w, a, b)} is not incident")
    return p


class MarkEdgeStage(ToEdgeStage):
    """The inner endpoint adds the edge to the tree and tells the far side."""

    def at_endpoint(self, node, payload):
        st = node.state
        p = edge_port(st, *payload[:3])
        st.tree.add(p)
        node.send(p, ("JX",))

    def other(self, node, p, msg):
        node.state.tree.add(p)


class BroadcastStage(Stage):
    """Leaders push ``bc_value`` down their virtual tree; members store it in
    ``attr`` (or ``hist[hist_level]``)."""

    def __init__(self, L: int, window: int, tag: str, attr: str | None = None,
                 hist_level: int | None = None):
        self.L = L
        self.window = window
        self.tag = tag
        self.attr = attr
        self.hist_level = hist_level

    def start(self, node):
        st = node.state
        value = getattr(st, "bc_value", None)
        st.bc_value = None
        if value is not None and st.hist.get(self.L) == st.id:
            self._spread(node, (st.id, self.L), value)

    def _spread(self, node, s, value):
        st = node.state
        while True:
            for p in sorted(st.down.get(s, ())):
                node.send(p, ("BC",) + s + tuple(value))
            K, l = s
            if l == 1:
                if K == st.hist[1]:
                    self.apply(node, value)
                return
            if K == st.hist.get(l) and st.hist.get(l - 1) == st.id:
                s = (st.id, l - 1)
                continue
            return

    def apply(self, node, value):
        st = node.state
        if self.hist_level is not None:
            st.hist[self.hist_level] = value[0]
        else:
            setattr(st, self.attr, value if len(value) > 1 else value[0])

    def on(self, node, inbox):
        for _, msg in inbox:
            self._spread(node, (msg[1], msg[2]), msg[3:])


class RouteStage(Stage):
    """Leader-to-leader messages along handle routes.

    Leaders queue ``(handle, target side, payload)`` in ``rt_out``; the
    payload reaches the leader on that side and is handed to ``deliver``.
    """

    def __init__(self, window: int, tag: str, deliver=None):
        self.window = window
        self.tag = tag
        self._deliver = deliver

    def start(self, node):
        st = node.state
        out = getattr(st, "rt_out", None) or []
        st.rt_out = []
        for h, side, payload in out:
            self._forward(node, h, side, tuple(payload))

    def _forward(self, node, h, side, payload):
        st = node.state
        route = st.routes.get(h)
        p = route[side] if route is not None else None
        if p is None:
            raise ProtocolViolation(st.id, node.round, f"no route for handle {h} side {side}")
        if p == 0:
            self.deliver(node, h, side, payload)
        else:
            node.send(p, ("M",) + h + (side,) + payload)

    def on(self, node, inbox):
        for _, msg in inbox:
            self._forward(node, tuple(msg[1:4]), msg[4], msg[5:])

    def deliver(self, node, h, side, payload):
        self._deliver(node, h, side, payload)
