from dataclasses import replace

from hypothesis import given, settings
from hypothesis import strategies as st

from gsmv.model import Snapshot
from gsmv.statespace import (
    AbstractionPolicy,
    Bounded,
    CounterexamplePair,
    Edge,
    Equivalent,
    TransitionSystem,
    ViolationPath,
    build_dcds_ts,
    build_gsm_ts,
    check_bisimulation,
    isomorphic,
    max_payload_slots,
    monitor_boundedness,
    to_dot,
    to_text,
)
from gsmv.translate import translate


def test_payload_slots(order_model, nocreate_model):
    assert max_payload_slots(order_model) == 2
    assert AbstractionPolicy.for_model(order_model, extra=1).fresh == 3


def test_bounded_order_is_finite_and_reaches_payment(order_program):
    ts = build_gsm_ts(order_program, containers={"Order": 1, "Item": 1})
    assert not ts.truncated and not ts.frontier
    assert any("Order paid" in s.of_type("Order")[0].achieved for s in ts.snapshots)
    assert max(ts.sizes) == 2


def test_ineffective_event_is_a_self_loop(order_program):
    ts = build_gsm_ts(order_program, containers={"Order": 1, "Item": 1})
    # paying with no items does not open the stage
    assert any(e.src == e.dst == ts.initial and e.label == "payRequest" for e in ts.succ(ts.initial))


def test_truncation_without_containers(order_program):
    ts = build_gsm_ts(order_program, max_states=50)
    assert ts.truncated and len(ts) == 50 and ts.frontier


def test_depth_bound_marks_frontier(order_program):
    ts = build_gsm_ts(order_program, max_depth=1)
    assert ts.truncated
    assert all(ts.depth[i] == 1 for i in ts.frontier)


def test_dfs_goes_deep(order_program):
    ts = build_gsm_ts(order_program, max_states=40, order="dfs")
    bfs = build_gsm_ts(order_program, max_states=40)
    assert max(ts.sizes) >= 10 > max(bfs.sizes)
    assert ts.truncated and ts.frontier


def test_stop_predicate_ends_exploration(order_program):
    ts = build_gsm_ts(order_program, order="dfs", stop=lambda s: s.size() > 2)
    assert ts.truncated and max(ts.sizes) == 3 and sum(1 for z in ts.sizes if z > 2) == 1


def test_gsm_and_dcds_bisimilar_without_creation(nocreate_program):
    spec, tmap = translate(nocreate_program)
    g = build_gsm_ts(nocreate_program)
    d = build_dcds_ts(spec, tmap, check_aux_bounds=True)
    assert d.meta["aux_bound_violations"] == []
    assert check_bisimulation(g, d)
    assert isomorphic(g, d)


def test_self_bisimilar(order_program):
    ts = build_gsm_ts(order_program, containers={"Order": 1, "Item": 1})
    res = check_bisimulation(ts, ts)
    assert isinstance(res, Equivalent) and res


# -- hand-built systems -------------------------------------------------------


def _mk(model, contents, edges, initial=0):
    base = model.initial_snapshot.instances[0]
    ts = TransitionSystem("test", model)
    for k, ms in enumerate(contents):
        snap = Snapshot((replace(base, achieved=frozenset(ms)),))
        ts.add_state(("s", k), snap, 1, 0)
    for a, label, b in edges:
        ts.add_edge(Edge(a, label, b))
    ts.initial = initial
    return ts


def test_flipped_milestone_gives_counterexample(order_model):
    t1 = _mk(order_model, [(), ("Order paid",)], [(0, "pay", 1)])
    t2 = _mk(order_model, [(), ()], [(0, "pay", 1)])
    res = check_bisimulation(t1, t2)
    assert isinstance(res, CounterexamplePair) and not res
    assert res.path == ("pay",) and res.reason == "state contents differ"


def test_missing_step_gives_counterexample(order_model):
    t1 = _mk(order_model, [(), ()], [(0, "a", 1), (1, "b", 0)])
    t2 = _mk(order_model, [(), ()], [(0, "a", 1)])
    res = check_bisimulation(t1, t2)
    assert res.path == ("a", "b") and "cannot match" in res.reason


def test_unrolled_loop_is_bisimilar_but_not_isomorphic(order_model):
    t1 = _mk(order_model, [()], [(0, "a", 0)])
    t2 = _mk(order_model, [(), ()], [(0, "a", 1), (1, "a", 0)])
    assert check_bisimulation(t1, t2)
    assert not isomorphic(t1, t2)


MS = ["item added", "Order paid"]


@st.composite
def small_systems(draw):
    n = draw(st.integers(1, 5))
    contents = [draw(st.sets(st.sampled_from(MS), max_size=1)) for _ in range(n)]
    edges = draw(st.lists(st.tuples(st.integers(0, n - 1), st.sampled_from("ab"), st.integers(0, n - 1)),
                          max_size=8))
    return contents, edges


def naive_bisimilar(t1, t2):
    rel = {(i, j) for i in range(len(t1)) for j in range(len(t2)) if t1.key(i) == t2.key(j)}
    changed = True
    while changed:
        changed = False
        for i, j in list(rel):
            fwd = all(any(f.label == e.label and (e.dst, f.dst) in rel for f in t2.succ(j)) for e in t1.succ(i))
            bwd = all(any(f.label == e.label and (f.dst, e.dst) in rel for f in t1.succ(i)) for e in t2.succ(j))
            if not (fwd and bwd):
                rel.discard((i, j))
                changed = True
    return (t1.initial, t2.initial) in rel


@settings(max_examples=300, deadline=None)
@given(small_systems(), small_systems())
def test_partition_refinement_matches_naive(order_model, a, b):
    t1, t2 = _mk(order_model, *a), _mk(order_model, *b)
    assert bool(check_bisimulation(t1, t2)) == naive_bisimilar(t1, t2)


# -- boundedness --------------------------------------------------------------


def test_monitor_bounded(order_program):
    ts = build_gsm_ts(order_program, containers={"Order": 1, "Item": 2})
    res = monitor_boundedness(ts, 3)
    assert isinstance(res, Bounded) and res.max_size == 3 and not res.truncated


def test_monitor_reports_shortest_violation(order_program):
    ts = build_gsm_ts(order_program, containers={"Order": 1, "Item": 2})
    res = monitor_boundedness(ts, 2)
    assert isinstance(res, ViolationPath) and not res
    assert res.sizes[-1] == 3 and res.sizes[0] == 1
    assert list(res.labels).count("add item") == 2
    assert len(res.states) == len(res.labels) + 1


def test_text_and_dot_export(order_program):
    ts = build_gsm_ts(order_program, containers={"Order": 1, "Item": 1})
    text = to_text(ts)
    assert text.startswith(f"# kind=gsm states={len(ts)} ")
    assert "-[itemRequest]->" in text
    dot = to_dot(ts)
    assert dot.startswith("digraph ts {") and dot.count(" -> ") == sum(len(ts.succ(i)) for i in range(len(ts)))


def test_path_to_unreachable(order_model):
    ts = _mk(order_model, [(), ()], [])
    assert ts.path_to(1) is None and ts.path_to(0) == []
