"""Fixed-length protocol stages and the per-node state they share.

A multi-stage algorithm runs a sequence of ``Stage`` protocols on one set of
node runtimes.  Every stage lasts exactly ``window`` rounds: each node wakes
at the window end, finalizes and halts, so all nodes enter the next stage in
the same round.  Window lengths are closed forms of values every node knows
(n, the iteration index, constants, and later the diameter estimate).  A
message still travelling after the window closes means the budget was too
small and is reported as a protocol violation.
"""
from __future__ import annotations

from .graph import edge_key
from .sim import Engine, ProtocolViolation, RunMetrics

NO_EDGE = (-1, -1, -1)


class NodeState:
    """Protocol-owned memory of one node.  Filled in by the stages."""

    def __init__(self, node):
        self.id = node.node_id
        self.nbr: dict[int, int] = {}          # port -> neighbour id (after hello)
        self.keys: dict[int, tuple] = {}       # port -> edge key
        self.tree: set[int] = set()            # ports of selected MST edges
        self.dead: set[int] = set()            # ports known to stay inside the fragment
        self.nbr_frag: dict[int, int] = {}     # port -> neighbour's announced fragment id
        self.announced = None
        self.frag = node.node_id
        self.is_leader = True
        self.parent = 0
        self.children: tuple = ()
        self.depth = 0
        self.reached = False

    def port_of_key(self, key):
        for p, k in self.keys.items():
            if k == key:
                return p
        return 0


class Stage:
    """Base class: subclasses override start/on/tick/finish.

    ``start`` runs at round 0 and ``on``/``tick`` whenever the node has mail
    or a wake-up due.  ``finish`` runs for every node once the window closes.
    """

    tag = "main"
    window = 1

    def init(self, node):
        self.start(node)
        node.halt()

    def step(self, node, inbox):
        if node.round > max(1, self.window):
            raise ProtocolViolation(node.node_id, node.round,
                                    f"{type(self).__name__}: traffic after the window")
        if inbox:
            self.on(node, inbox)
        else:
            self.tick(node)
        node.halt()

    def start(self, node):
        pass

    def on(self, node, inbox):
        pass

    def tick(self, node):
        pass

    def finish(self, node):
        pass


class Runner:
    """Runs stages back to back on persistent node runtimes and sums metrics."""

    def __init__(self, g, nodes, seed: int, B: int = 8):
        self.g = g
        self.nodes = nodes
        self.engine = Engine(g, B)
        self.seed = seed
        self.metrics = RunMetrics()
        self.busy_rounds = 0
        self.stages = 0

    def run(self, stage: Stage, tag: str | None = None) -> RunMetrics:
        """Run one fixed-window stage; it is charged exactly its window."""
        tag = tag or stage.tag
        window = max(1, stage.window)
        _, m = self.engine.run(stage, seed=self.seed, round_limit=window + 1, nodes=self.nodes, tag=tag)
        for nd in self.nodes:
            nd.round = window
            stage.finish(nd)
        self.busy_rounds += m.rounds
        self.stages += 1
        m.rounds = window
        self.metrics.absorb(m)
        return m

    def run_open(self, protocol, tag: str, round_limit: int = 10 ** 9) -> RunMetrics:
        """Run a self-terminating protocol; it is charged the rounds it used.

        ``finish`` (if defined) runs at every node once traffic has stopped.
        """
        _, m = self.engine.run(protocol, seed=self.seed, round_limit=round_limit,
                               nodes=self.nodes, tag=tag)
        finish = getattr(protocol, "finish", None)
        if finish is not None:
            for nd in self.nodes:
                finish(nd)
        self.busy_rounds += m.rounds
        self.stages += 1
        self.metrics.absorb(m)
        return m


class HelloStage(Stage):
    """Neighbours swap ids once so that every node can form full edge keys."""

    window = 1

    def start(self, node):
        node.send_all(("H", node.node_id))

    def on(self, node, inbox):
        st = node.state
        for p, msg in inbox:
            st.nbr[p] = msg[1]
            st.keys[p] = edge_key(node.weight(p), node.node_id, msg[1])


def fresh_states(nodes):
    for nd in nodes:
        nd.state = NodeState(nd)
