"""End-to-end driver for the round- and message-efficient MST."""
from __future__ import annotations

from .. import cghs
from ..election import run_election
from ..graph import WeightedEdge, WeightedGraph
from ..oracle import MstResult
from ..sim import RunMetrics, make_nodes
from ..stages import fresh_states
from .config import AlgoConfig, Windows
from .phase2 import run_phase2
from .phase3 import run_phase3
from .routing import init_phase1


def _tree_edges(nodes) -> frozenset:
    edges = set()
    for nd in nodes:
        st = nd.state
        for p in st.tree:
            nb = st.nbr[p]
            edges.add(WeightedEdge(min(st.id, nb), max(st.id, nb), nd.weight(p)))
    return frozenset(edges)


def fragments_at(nodes, level: int) -> dict:
    """Fragment id -> member ids, from every node's ``hist[level]``."""
    out: dict[int, set] = {}
    for nd in nodes:
        out.setdefault(nd.state.hist[level], set()).add(nd.node_id)
    return out


def run_opt_mst(g: WeightedGraph, cfg: AlgoConfig | None = None, seed: int = 0,
                trace: dict | None = None, snapshot=None) -> tuple[MstResult, RunMetrics]:
    """Compute the MST of ``g`` in the simulator.

    ``trace`` (a dict) receives the diameter estimate, the middle-phase
    level reached and per-round class counts of the last phase.
    ``snapshot(i, nodes)`` is called after each middle-phase iteration.
    """
    cfg = cfg or AlgoConfig()
    if g.n == 1:
        return MstResult(frozenset(), 0, "opt"), RunMetrics(messages_by_tag={cghs.TAG: 0})
    runner = cghs.prepare(g, seed, cfg.B)
    cghs.run_iterations(runner, g.n, cghs.iteration_count(g.n, cfg.cghs_extra_iterations))
    init_phase1(runner.nodes)
    d_est = run_election(runner)
    if cfg.d_estimate is not None:
        d_est = cfg.d_estimate
    win = Windows(g.n, d_est, cfg)
    level = 1
    if not win.skip_middle():
        level = run_phase2(runner, win, cfg, trace, snapshot)
    p3_rounds = run_phase3(runner, win, level, trace)
    if trace is not None:
        trace.update(d_est=d_est, level=level, phase3_rounds=p3_rounds,
                     base_fragments=len(fragments_at(runner.nodes, 1)),
                     final_units=len(fragments_at(runner.nodes, level)),
                     busy_rounds=runner.busy_rounds)
    edges = _tree_edges(runner.nodes)
    return MstResult(edges, sum(e.w for e in edges), "opt"), runner.metrics
