import pytest

from dmst import graph as gm
from dmst.graph import WeightedGraph
from dmst.opt import AlgoConfig, Windows, fragments_at, run_opt_mst
from dmst.opt import phase2
from dmst.opt.phase3 import boruvka_decide
from dmst.opt.routing import canonical, top_level, virtual_slots
from dmst.oracle import component_loe, kruskal
from dmst.sim import ProtocolViolation

STRESS = AlgoConfig(c_skip=0.0, cghs_extra_iterations=-2)


def forced(g):
    """An over-estimate of the diameter forces middle-phase iterations on any graph."""
    return AlgoConfig(c_skip=0.0, cghs_extra_iterations=-2, d_estimate=2 * g.n)


def same_as_oracle(g, **kw):
    res, metrics = run_opt_mst(g, **kw)
    assert res.keys == kruskal(g).keys
    return res, metrics


def test_triangle():
    g = WeightedGraph(range(3), [(0, 1, 1), (1, 2, 2), (0, 2, 3)])
    res, _ = same_as_oracle(g)
    assert sorted(e.w for e in res.edges) == [1, 2]


@pytest.mark.parametrize("g", [gm.generate_path(30, seed=1), gm.generate_caterpillar(8, 2, 0)], ids=repr)
def test_tree_input(g):
    res, _ = same_as_oracle(g, cfg=STRESS)
    assert res.edges == frozenset(g.edges)


def test_single_node():
    res, m = run_opt_mst(gm.generate_path(1))
    assert not res.edges and m.messages_total == 0 and m.rounds == 0


def test_fixed_instance():
    same_as_oracle(gm.generate_random_connected(256, 1024, 11))


def test_random_sweep():
    for s in range(100):
        n = 2 + (s * 37) % 120
        m = min(n * (n - 1) // 2, n - 1 + (s * 13) % (3 * n))
        same_as_oracle(gm.generate_random_connected(n, m, s), seed=s)


@pytest.mark.parametrize("make", [
    lambda s: gm.generate_path(48, seed=s),
    lambda s: gm.generate_banded_path(80, 3, 30, s),
    lambda s: gm.generate_grid(3, 25, s),
    lambda s: gm.generate_caterpillar(25, 1, s),
    lambda s: gm.generate_random_connected(60, 70, s),
])
def test_middle_phase_stress(make):
    for s in range(3):
        trace = {}
        same_as_oracle(make(s), cfg=STRESS, seed=s, trace=trace)


def audit_routing(g, nodes, level):
    """up and down are exact mirrors, and every upward walk ends at its leader."""
    for nd in nodes:
        st = nd.state
        for (K, l), p in st.up.items():
            y, q = g.port_target(st.id, p)
            other = nodes[g.index[y]].state
            assert q in other.down.get((K, l), ()), (st.id, K, l)
        for (K, l), ports in st.down.items():
            for p in ports:
                y, q = g.port_target(st.id, p)
                assert nodes[g.index[y]].state.up.get((K, l)) == q, (st.id, K, l)
    for fid, members in fragments_at(nodes, level).items():
        for x in members:
            st = nodes[g.index[x]].state
            virtual_slots(st, level)
            y, l, K, hops = x, 1, st.hist[1], 0
            while True:
                s = nodes[g.index[y]].state
                if (K, l) in s.up:
                    y = g.port_target(y, s.up[(K, l)])[0]
                    hops += 1
                    assert hops <= 4 * g.n
                elif l < level:
                    assert K == s.id, "walk stalled away from the leader"
                    l += 1
                    K = s.hist[l]
                else:
                    break
            assert y == fid and nodes[g.index[y]].state.hist[level] == fid


def test_phase1_tables_on_a_path():
    """Leader at the end of a 4-node path: an up chain of 3 hops, down its mirror."""
    from dmst.opt.routing import init_phase1
    from dmst.sim import make_nodes
    from dmst.stages import fresh_states
    g = gm.generate_path(4)
    nodes = make_nodes(g, 0)
    fresh_states(nodes)
    for nd in nodes:
        st = nd.state
        st.frag = 3
        st.parent = 0 if nd.node_id == 3 else (1 if nd.node_id == 0 else 2)
        st.children = () if nd.node_id == 0 else (1,)
    init_phase1(nodes)
    audit_routing(g, nodes, 1)
    hops, x = 0, 0
    while (3, 1) in nodes[x].state.up:
        x = g.port_target(x, nodes[x].state.up[(3, 1)])[0]
        hops += 1
    assert (x, hops) == (3, 3)
    assert [len(nd.state.down.get((3, 1), ())) for nd in nodes] == [0, 1, 1, 1]


def test_phase1_tables_after_controlled_ghs():
    from dmst import cghs
    from dmst.opt.routing import init_phase1
    for s in range(3):
        g = gm.generate_random_connected(64, 150, s)
        runner = cghs.prepare(g, s)
        cghs.run_iterations(runner, g.n, cghs.iteration_count(g.n, 1))
        init_phase1(runner.nodes)
        audit_routing(g, runner.nodes, 1)


def test_singleton_fragment_tables():
    from dmst.opt.routing import init_phase1
    from dmst.sim import make_nodes
    from dmst.stages import fresh_states
    nodes = make_nodes(gm.generate_path(3), 0)
    fresh_states(nodes)
    init_phase1(nodes)
    for nd in nodes:
        assert nd.state.hist == {1: nd.node_id} and not nd.state.up and not nd.state.down


@pytest.mark.parametrize("make", [
    lambda s: gm.generate_random_connected(64, 100, s),
    lambda s: gm.generate_path(64, seed=s),
    lambda s: gm.generate_banded_path(96, 3, 40, s),
])
def test_routing_reciprocity_every_iteration(make):
    for s in range(2):
        g = make(s)
        levels = []

        def snap(i, nodes):
            audit_routing(g, nodes, i)
            levels.append(i)

        same_as_oracle(g, cfg=forced(g), seed=s, snapshot=snap)
        assert levels, "middle phase did not run"


@pytest.fixture
def audited(monkeypatch):
    """Wrap the middle-phase steps with centralized audits."""
    log = {"fl": 0, "mm": 0}
    real_fl, real_mm = phase2.find_lightest, phase2.compute_maximal_matching

    def fl(runner, win, i, trace=None):
        out = real_fl(runner, win, i, trace)
        g, nodes = runner.g, runner.nodes
        for fid, members in fragments_at(nodes, i - 1).items():
            st = nodes[g.index[fid]].state
            edge, size = st.fl_result
            want = component_loe(g, members)
            assert size == len(members)
            if want is None:
                assert edge is None
            else:
                assert canonical(*edge) == want.key
                assert st.active == (size < win.active_size(i))
            log["fl"] += 1
        return out

    def mm(runner, win, i):
        real_mm(runner, win, i)
        g, nodes = runner.g, runner.nodes
        leaders = {fid: nodes[g.index[fid]].state for fid in fragments_at(nodes, i - 1)}
        for fid, st in leaders.items():
            if st.partner is not None:
                assert leaders[st.partner].matched
            if st.has_parent:
                parent = leaders[st.target[1]]
                assert parent.active
                assert st.matched or parent.matched, "matching not maximal"
            log["mm"] += 1

    monkeypatch.setattr(phase2, "find_lightest", fl)
    monkeypatch.setattr(phase2, "compute_maximal_matching", mm)
    return log


def test_find_lightest_and_matching_audits(audited):
    for s in range(4):
        same_as_oracle(gm.generate_path(64, seed=s), cfg=STRESS, seed=s)
        g = gm.generate_random_connected(70, 90, s)
        same_as_oracle(g, cfg=forced(g), seed=s)
    assert audited["fl"] > 0 and audited["mm"] > 0


def test_boruvka_decide():
    # two units joined by two candidate edges; the root keeps the cut minimum
    items = [(1, 1, 5, 1, 9, 9), (9, 9, 3, 9, 4, 1)]
    replies, before, after = boruvka_decide(items)
    assert (before, after) == (2, 1)
    picked = {u for u, _, p in replies if p}
    assert picked == {1, 9}
    assert {lab for _, lab, _ in replies} == {1}
    assert boruvka_decide([]) == ([], 0, 0)


def test_single_unit_ends_after_one_round():
    g = gm.generate_random_connected(8, 12, 0)
    trace = {}
    same_as_oracle(g, trace=trace)
    if trace["base_fragments"] == 1:
        assert trace["phase3_classes"] == [(0, 0)]


def test_phase3_halving_in_trace():
    for s in range(5):
        trace = {}
        same_as_oracle(gm.generate_random_connected(150, 300, s), seed=s,
                       cfg=AlgoConfig(cghs_extra_iterations=-2), trace=trace)
        for before, after in trace["phase3_classes"]:
            assert after <= (before + 1) // 2


def test_skip_rule_and_trace():
    g = gm.generate_random_connected(100, 400, 0)
    trace = {}
    same_as_oracle(g, trace=trace)
    assert trace["level"] == 1 and "active" not in trace
    assert gm.hop_diameter(g) <= trace["d_est"] <= 2 * gm.hop_diameter(g)


def test_tiny_windows_are_reported():
    g = gm.generate_path(64, seed=0)
    cfg = AlgoConfig(c_skip=0.0, multipliers={"findlightest": 0.01})
    with pytest.raises(ProtocolViolation):
        run_opt_mst(g, cfg=cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        AlgoConfig(c1=0.5)
    win = Windows(1024, 2046, AlgoConfig())
    assert win.phase2_last() == 6
    assert not win.skip_middle()
    assert Windows(1024, 100, AlgoConfig()).skip_middle()


def test_metrics_tags():
    _, m = run_opt_mst(gm.generate_path(64, seed=1), cfg=STRESS)
    for tag in ("cghs", "election", "findlightest", "findpath", "matching", "merge", "phase3"):
        assert tag in m.messages_by_tag
    assert sum(m.messages_by_tag.values()) == m.messages_total
