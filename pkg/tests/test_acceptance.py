"""Acceptance criteria 1-9; each test records a one-line summary."""

import random
import sys
import time

import pytest

from gsmv import corpus_path
from gsmv.engine import Program, b_step, compile_model
from gsmv.mucalc import alternation_depth, check, check_brute
from gsmv.pac import RuleOrder, is_linear_extension, linear_extensions, random_linear_extension
from gsmv.statespace import (
    AbstractionPolicy,
    ViolationPath,
    build_dcds_ts,
    build_gsm_ts,
    check_bisimulation,
    filtered_ts,
    gsm_events,
    isomorphic,
    max_payload_slots,
    monitor_boundedness,
)
from gsmv.syntax import load_model
from gsmv.translate import translate
from gsmv.turing import HALTING_2STATE, LOOPING_RIGHT, encode_turing_machine

from gen import random_formula, random_ts

ORDER_BOUNDS = {"Order": 1, "Item": 2}
CORPUS = ["order", "order_nocreate", "turing_halting", "turing_looping"]
# containers used whenever a corpus model must be explored finitely
BOUNDS = {"order": ORDER_BOUNDS}


def _program(name):
    return compile_model(load_model(corpus_path(name)))


@pytest.fixture
def record(record_property):
    def rec(n, detail):
        record_property("criterion", n)
        record_property("detail", detail)
        print(f"criterion {n}: {detail}")
    return rec


# -- 1 ------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["order", "order_nocreate", "turing_halting"])
def test_criterion_1_translation_equivalence(name, record):
    program = _program(name)
    model = program.model
    policy = AbstractionPolicy.for_model(model, extra=1)
    t0 = time.perf_counter()
    g = build_gsm_ts(program, policy, max_depth=4, containers=BOUNDS.get(name))
    spec, tmap = translate(program, BOUNDS.get(name))
    d = filtered_ts(build_dcds_ts(spec, tmap, policy, max_depth=4))
    res = check_bisimulation(g, d)
    dt = time.perf_counter() - t0
    record(1, f"{name}: {type(res).__name__}, {len(g)} vs {len(d)} states, {dt:.1f}s")
    assert res, res
    assert dt < 60


# -- 2 ------------------------------------------------------------------------


def test_criterion_2_auxiliary_bounds(record):
    program = _program("order")
    spec, tmap = translate(program, ORDER_BOUNDS)
    t0 = time.perf_counter()
    ts = build_dcds_ts(spec, tmap, check_aux_bounds=True)
    dt = time.perf_counter() - t0
    viol = ts.meta["aux_bound_violations"]
    record(2, f"{len(ts)} unblocked states, {ts.meta['micro_states']} micro-step states visited, "
              f"{len(viol)} violations, {dt:.1f}s")
    assert not ts.truncated
    assert viol == []


# -- 3 ------------------------------------------------------------------------


def test_criterion_3_constant_size(record):
    program = _program("order_nocreate")
    model = program.model
    s0 = model.initial_snapshot
    width = sum(len(i.values) for i in s0.instances)
    g = build_gsm_ts(program)
    spec, tmap = translate(program)
    d = build_dcds_ts(spec, tmap)
    sizes = {(s.size(), sum(len(i.values) for i in s.instances)) for s in g.snapshots + d.snapshots}
    record(3, f"{len(g)} GSM / {len(d)} DCDS states, sizes seen {sorted(sizes)}, initial {(s0.size(), width)}")
    assert not g.truncated and not d.truncated
    assert sizes == {(s0.size(), width)}


# -- 4 ------------------------------------------------------------------------


def test_criterion_4_turing_encoding(record):
    t0 = time.perf_counter()
    halting = compile_model(encode_turing_machine(HALTING_2STATE))
    ts = build_gsm_ts(halting)
    res = check(ts, 'mu Z. achieved("Halt") | <-> Z')
    looping = compile_model(encode_turing_machine(LOOPING_RIGHT))
    lts = build_gsm_ts(looping, max_states=200)
    bound = lts.sizes[lts.initial] + 6
    mon = monitor_boundedness(lts, bound)
    dt = time.perf_counter() - t0
    wit = " ; ".join(e.label for e in res.witness or ())
    record(4, f"halting: {'TRUE' if res.holds else 'FALSE'} via [{wit}]; looping: truncated={lts.truncated}, "
              f"{type(mon).__name__} to size {mon.sizes[-1] if not mon else '-'} (bound {bound}), {dt:.1f}s")
    assert res.holds and res.witness
    end = ts.snapshots[res.witness[-1].dst]
    assert any("Halt" in i.achieved for i in end.instances)
    assert lts.truncated and isinstance(mon, ViolationPath)
    assert mon.sizes[-1] > bound
    assert dt < 30


# -- 5 ------------------------------------------------------------------------


def test_criterion_5_unbounded_order(record):
    program = _program("order")
    t0 = time.perf_counter()
    bound = program.model.initial_snapshot.size() + 3  # one instance per item tuple
    ts = build_gsm_ts(program, max_states=200, order="dfs", stop=lambda s: s.size() > bound)
    mon = monitor_boundedness(ts, bound)
    dt = time.perf_counter() - t0
    assert isinstance(mon, ViolationPath), mon
    requests = [l for l in mon.labels if l in ("itemRequest", "payRequest")]
    record(5, f"ViolationPath over {len(mon.labels)} B-steps, {requests.count('itemRequest')} itemRequests, "
              f"sizes {list(mon.sizes)}, {dt:.1f}s")
    # consecutive item requests: no payment in between
    assert requests.count("itemRequest") >= 3 and "payRequest" not in requests
    assert list(mon.sizes) == sorted(mon.sizes)
    assert mon.sizes[-1] > bound
    assert dt < 10


# -- 6 ------------------------------------------------------------------------


def test_criterion_6_checker_vs_brute_force(record):
    rng = random.Random(20261016)
    model = load_model(corpus_path("order"))
    agree = 0
    for _ in range(500):
        ts = random_ts(rng, model, max_states=12)
        f = random_formula(rng, depth=5, max_alternation=2)
        assert alternation_depth(f) <= 2 and len(ts) <= 12
        agree += check(ts, f).holds == check_brute(ts, f)
    record(6, f"{agree}/500 agree")
    assert agree == 500


# -- 7 ------------------------------------------------------------------------


def _orders(program, rng, limit=20):
    ids = [r.id for r in program.rules]
    edges = program.order.edges
    orders = linear_extensions(ids, edges, limit=limit + 1)
    if len(orders) > limit:
        orders = [random_linear_extension(ids, edges, rng) for _ in range(limit)]
    assert all(is_linear_extension(o, edges) for o in orders)
    return orders


@pytest.mark.parametrize("name", CORPUS)
def test_criterion_7_confluence(name, record):
    rng = random.Random(7)
    program = _program(name)
    model = program.model
    policy = AbstractionPolicy.for_model(model)
    orders = _orders(program, rng)
    s = model.initial_snapshot
    traces = toggle_bad = 0
    for _ in range(50):
        e = rng.choice(gsm_events(model, s, policy))
        results = set()
        for order in orders:
            nxt, trace = b_step(program, s, e, order=order)
            traces += 1
            tog = trace.toggled()
            toggle_bad += len(tog) != len(set(tog))
            results.add(nxt)
        assert len(results) == 1, f"orders disagree on {e}"
        s = results.pop()
    record(7, f"{name}: {len(orders)} orders x 50 events, {traces} traces, {toggle_bad} toggle-once violations")
    assert toggle_bad == 0


# -- 8 ------------------------------------------------------------------------


@pytest.mark.parametrize("name", CORPUS)
def test_criterion_8_abstraction_adequacy(name, record):
    program = _program(name)
    k = max_payload_slots(program.model)
    depth = None if name in ("order", "order_nocreate", "turing_halting") else 6
    a = build_gsm_ts(program, AbstractionPolicy(k), containers=BOUNDS.get(name), max_depth=depth)
    b = build_gsm_ts(program, AbstractionPolicy(k + 2), containers=BOUNDS.get(name), max_depth=depth)
    iso = isomorphic(a, b)
    record(8, f"{name}: k={k}, {len(a)} vs {len(b)} states, isomorphic={iso}")
    assert iso


# -- 9 ------------------------------------------------------------------------


def _enumerate_paths(ts):
    """Simple paths from the initial state, cut where the order is paid."""
    def has(i, m):
        return m in ts.snapshots[i].of_type("Order")[0].achieved

    found = {"paid": False, "receipt first": False}
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * len(ts) + 100))

    def dfs(u, on_path):
        if has(u, "Order paid"):
            found["paid"] = True
            return
        if has(u, "receipt sent"):
            found["receipt first"] = True
        for v in sorted({e.dst for e in ts.succ(u)}):
            if v not in on_path:
                on_path.add(v)
                dfs(v, on_path)
                on_path.discard(v)

    dfs(ts.initial, {ts.initial})
    return found


def test_criterion_9_domain_property(record):
    t0 = time.perf_counter()
    ts = build_gsm_ts(_program("order"), containers=ORDER_BOUNDS)
    before = check(ts, 'mu Z. (achieved("receipt sent") & !achieved("Order paid")) '
                       '| (!achieved("Order paid") & <-> Z)')
    reach = check(ts, 'mu Z. achieved("Order paid") | <-> Z')
    dt = time.perf_counter() - t0
    brute = _enumerate_paths(ts)
    record(9, f"receipt before pay: {before.holds} (paths: {brute['receipt first']}); "
              f"pay reachable: {reach.holds} (paths: {brute['paid']}); {len(ts)} states, {dt:.1f}s")
    assert before.holds is False and reach.holds is True
    assert brute == {"paid": True, "receipt first": False}
    assert dt < 10
