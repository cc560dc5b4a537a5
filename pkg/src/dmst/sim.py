"""Synchronous CONGEST round engine.

Protocols are objects with ``init(node)`` (round 0) and ``step(node, inbox)``
methods, plus optional ``output(node)``.  A node sees only its own id, its
ports, the numeric weights on those ports, the round number and whatever it
has been sent; the engine keeps the wiring private.

Delivery is lockstep: a message sent in round r is readable in round r+1.
Each edge direction carries one message per round; extra messages queued on
the same port wait in FIFO order, so congestion shows up as extra rounds.
Nodes that neither receive anything nor asked to be woken are idle for that
round, which is equivalent to running a no-op step; the engine skips them.
A halted node sleeps until a message arrives or a wake-up it asked for
falls due.  The run ends once every node has halted, nothing is in flight and
no wake-up is pending.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
import hashlib
import heapq
import json

import numpy as np

from .graph import WeightedGraph

DEFAULT_B = 8


class ProtocolViolation(RuntimeError):
    def __init__(self, node_id, round_no, reason):
        super().__init__(f"protocol violation at node {node_id}, round {round_no}: {reason}")
        self.node_id = node_id
        self.round = round_no
        self.reason = reason


class SimulationTimeout(RuntimeError):
    def __init__(self, message, metrics):
        super().__init__(message)
        self.metrics = metrics


@dataclass
class RunMetrics:
    rounds: int = 0
    messages_total: int = 0
    messages_by_tag: dict = field(default_factory=dict)
    words_total: int = 0

    def absorb(self, other: "RunMetrics") -> None:
        """Append a later sequential run: rounds and counts add up."""
        self.rounds += other.rounds
        self.messages_total += other.messages_total
        self.words_total += other.words_total
        for k, v in other.messages_by_tag.items():
            self.messages_by_tag[k] = self.messages_by_tag.get(k, 0) + v

    def copy(self) -> "RunMetrics":
        return RunMetrics(self.rounds, self.messages_total, dict(self.messages_by_tag), self.words_total)

    def as_dict(self) -> dict:
        return {"rounds": self.rounds, "messages_total": self.messages_total,
                "messages_by_tag": dict(sorted(self.messages_by_tag.items())),
                "words_total": self.words_total}


class NodeRuntime:
    """What protocol code may touch at one node."""

    __slots__ = ("node_id", "degree", "state", "round", "halted",
                 "_weights", "_eng", "_idx", "_seed", "_rng")

    def __init__(self, node_id, degree, weights, idx, seed):
        self.node_id = node_id
        self.degree = degree
        self.state = None
        self.round = 0
        self.halted = False
        self._weights = weights
        self._eng = None
        self._idx = idx
        self._seed = seed
        self._rng = None

    @property
    def ports(self) -> range:
        return range(1, self.degree + 1)

    def weight(self, port: int) -> int:
        """Numeric weight of the edge on ``port`` (no neighbour identity)."""
        return self._weights[port - 1]

    @property
    def rng(self) -> np.random.Generator:
        if self._rng is None:
            ss = np.random.SeedSequence(entropy=self._seed, spawn_key=(self.node_id,))
            self._rng = np.random.Generator(np.random.PCG64(ss))
        return self._rng

    def send(self, port: int, msg: tuple) -> None:
        self._eng._send(self, port, msg)

    def send_all(self, msg: tuple, exclude=()) -> None:
        for p in range(1, self.degree + 1):
            if p not in exclude:
                self._eng._send(self, p, msg)

    def wake_at(self, round_no: int) -> None:
        self._eng._wake(self, round_no)

    def wake_in(self, k: int) -> None:
        self._eng._wake(self, self.round + k)

    def halt(self) -> None:
        self.halted = True


def make_nodes(g: WeightedGraph, seed: int) -> list[NodeRuntime]:
    nodes = []
    for i, x in enumerate(g.node_ids):
        ws = tuple(g.edges[k].w for _, k in g.adjacency[i])
        nodes.append(NodeRuntime(x, len(ws), ws, i, seed))
    return nodes


class Engine:
    """Runs one protocol over a graph.  Node runtimes may be passed in to keep
    state across consecutive protocol runs (a multi-stage algorithm)."""

    def __init__(self, g: WeightedGraph, B: int = DEFAULT_B):
        self.g = g
        self.B = B
        # wiring: for node index i, port p -> (neighbor index, neighbor port)
        wiring = []
        for i, adj in enumerate(g.adjacency):
            row = []
            for j, k in adj:
                back = 0
                for q, (jj, kk) in enumerate(g.adjacency[j], 1):
                    if kk == k:
                        back = q
                        break
                row.append((j, back))
            wiring.append(tuple(row))
        self._wiring = tuple(wiring)
        self._stride = max((len(a) for a in g.adjacency), default=0) + 1

    def run(self, protocol, seed: int = 0, round_limit: int = 10 ** 9,
            nodes: list[NodeRuntime] | None = None, tag: str | None = None):
        g = self.g
        if round_limit < 0:
            raise ValueError("round_limit must be non-negative")
        if nodes is None:
            nodes = make_nodes(g, seed)
        tag = tag or getattr(protocol, "tag", "main")
        self._nodes = nodes
        self._out = []
        self._timers = []
        self._round = 0
        self._B = self.B
        metrics = RunMetrics(messages_by_tag={tag: 0})
        self._metrics = metrics
        backlog: dict[int, deque] = {}
        stride = self._stride
        wiring = self._wiring
        for nd in nodes:
            nd._eng = self
            nd.round = 0
            nd.halted = False
        step = protocol.step
        for nd in nodes:
            protocol.init(nd)
        r = 0
        last_event = 0
        pending = self._collect(backlog, stride, wiring, nodes, metrics, tag, r)
        while True:
            if not pending:
                timers = self._timers
                while timers and timers[0][0] <= r:
                    heapq.heappop(timers)
                if not timers:
                    if all(nd.halted for nd in nodes):
                        break
                    metrics.rounds = r
                    raise SimulationTimeout(
                        f"no messages in flight and no pending wake-ups at round {r}, "
                        f"but {sum(not nd.halted for nd in nodes)} nodes never halted", metrics)
                r = timers[0][0]
            else:
                r += 1
            if r > round_limit:
                metrics.rounds = round_limit
                raise SimulationTimeout(f"round limit {round_limit} reached", metrics)
            self._round = r
            active = pending
            timers = self._timers
            while timers and timers[0][0] <= r:
                t, i = heapq.heappop(timers)
                if t == r and i not in active:
                    active[i] = []
            for i in sorted(active):
                nd = nodes[i]
                nd.halted = False  # a message or a wake-up re-activates a halted node
                nd.round = r
                step(nd, active[i])
            last_event = r
            pending = self._collect(backlog, stride, wiring, nodes, metrics, tag, r)
        metrics.rounds = last_event
        outputs = {}
        out_fn = getattr(protocol, "output", None)
        for nd in nodes:
            outputs[nd.node_id] = out_fn(nd) if out_fn else None
        for nd in nodes:
            nd._eng = None
        return outputs, metrics

    # -- internals

    def _send(self, nd: NodeRuntime, port, msg):
        if type(msg) is not tuple:
            raise ProtocolViolation(nd.node_id, self._round, "message must be a tuple of words")
        if len(msg) > self._B:
            raise ProtocolViolation(nd.node_id, self._round,
                                    f"{len(msg)}-word message exceeds budget B={self._B}")
        for w in msg:
            t = type(w)
            if t is not int and t is not str and t is not bool:
                raise ProtocolViolation(nd.node_id, self._round, f"word of type {t.__name__}")
        if not (1 <= port <= nd.degree):
            raise ProtocolViolation(nd.node_id, self._round, f"no port {port}")
        if nd.halted:
            raise ProtocolViolation(nd.node_id, self._round, "halted node tried to send")
        self._out.append((nd._idx, port, msg))

    def _wake(self, nd: NodeRuntime, round_no: int):
        if round_no <= self._round:
            raise ProtocolViolation(nd.node_id, self._round, "wake-up must be in the future")
        heapq.heappush(self._timers, (round_no, nd._idx))

    def _collect(self, backlog, stride, wiring, nodes, metrics, tag, r):
        """Transmit this round's traffic; return deliveries for round r+1."""
        deliveries: dict[int, list] = {}
        used = set()
        sent = 0
        words = 0
        if backlog:
            for key in list(backlog):
                q = backlog[key]
                msg = q.popleft()
                if not q:
                    del backlog[key]
                used.add(key)
                i, p = divmod(key, stride)
                j, q2 = wiring[i][p - 1]
                deliveries.setdefault(j, []).append((q2, msg))
                sent += 1
                words += len(msg)
        out = self._out
        if out:
            for i, p, msg in out:
                key = i * stride + p
                if key in used:
                    q = backlog.get(key)
                    if q is None:
                        backlog[key] = q = deque()
                    q.append(msg)
                    continue
                used.add(key)
                j, q2 = wiring[i][p - 1]
                lst = deliveries.get(j)
                if lst is None:
                    deliveries[j] = [(q2, msg)]
                else:
                    lst.append((q2, msg))
                sent += 1
                words += len(msg)
            self._out = []
        if sent:
            metrics.messages_total += sent
            metrics.words_total += words
            metrics.messages_by_tag[tag] = metrics.messages_by_tag.get(tag, 0) + sent
        return deliveries


def run(g: WeightedGraph, protocol, seed: int = 0, round_limit: int = 10 ** 9, B: int = DEFAULT_B):
    """Execute ``protocol`` on ``g``; returns (outputs by node id, RunMetrics)."""
    return Engine(g, B).run(protocol, seed=seed, round_limit=round_limit)


def _canon(x):
    if isinstance(x, dict):
        return {str(k): _canon(v) for k, v in sorted(x.items(), key=lambda kv: repr(kv[0]))}
    if isinstance(x, (set, frozenset)):
        return sorted((_canon(v) for v in x), key=repr)
    if isinstance(x, (list, tuple)):
        return [_canon(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def replay_digest(metrics: RunMetrics, outputs) -> str:
    """Stable SHA-256 over (rounds, messages_total, outputs sorted by node id)."""
    items = sorted(outputs.items()) if isinstance(outputs, dict) else sorted(outputs, key=repr)
    payload = json.dumps([metrics.rounds, metrics.messages_total, _canon(items)],
                         sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


class FloodProtocol:
    """Broadcast a token from one source; each node forwards it once."""

    tag = "flood"

    def __init__(self, source_id):
        self.source_id = source_id

    def init(self, node):
        node.state = {"got": False, "at": None}
        if node.node_id == self.source_id:
            node.state.update(got=True, at=0)
            node.send_all(("tok",))
            node.halt()

    def step(self, node, inbox):
        st = node.state
        if not st["got"]:
            st["got"] = True
            st["at"] = node.round
            came = {p for p, _ in inbox}
            node.send_all(("tok",), exclude=came)
        node.halt()

    def output(self, node):
        return node.state["at"]
