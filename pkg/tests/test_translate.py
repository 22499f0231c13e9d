import pytest

from gsmv.dcds import DbInstance, DcdsError, apply_action, enabled_actions
from gsmv.engine import compile_model, run_script
from gsmv.model import EventInstance
from gsmv.syntax import load_model, parse_event_script
from gsmv.translate import (
    BLOCK,
    EXEC,
    ContainerConfig,
    TranslationError,
    att_rel,
    filter_state,
    is_unblocked,
    aux_bound_violations,
    mapping_report,
    translate,
)

from conftest import FIXTURES

GOLDEN = FIXTURES.parent / "golden"
ORDER_BOUNDS = {"Order": 1, "Item": 2}


def _event_oracle(e: EventInstance):
    payload = e.payload_dict()

    def oracle(db, calls):
        out = {}
        for fn, args in calls:
            kind, _, rest = fn.partition(":")
            if kind == "new":
                out[(fn, args)] = e.new_id
            else:
                out[(fn, args)] = payload[rest.rsplit(":", 1)[1]]
        yield out
    return oracle


def dcds_step(spec, db, e: EventInstance):
    """Apply the event rule for ``e`` and run micro-steps in rule order."""
    hits = []
    for en in enabled_actions(spec, db):
        if spec.action(en.action).label != e.type:
            continue
        for nxt in apply_action(spec, db, en.action, en.binding, _event_oracle(e)).successors:
            if (BLOCK, (e.target, True)) in nxt.facts:
                hits.append(nxt)
    assert len(hits) == 1, f"{len(hits)} ways to apply {e}"
    db = hits[0]
    while not is_unblocked(db):
        en = enabled_actions(spec, db)[0]
        (db,) = apply_action(spec, db, en.action, en.binding, _event_oracle(e)).successors
    return db


def test_exec_arity_and_fire_mapping(order_program):
    spec, tmap = translate(order_program, ORDER_BOUNDS)
    exec_rel = next(r for r in spec.schema if r.name == EXEC)
    assert exec_rel.arity == len(order_program.rules) + 1
    fires = dict(tmap.rule_to_ca)
    assert sorted(fires) == sorted(r.id for r in order_program.rules)
    assert len(set(fires.values())) == len(fires)
    for rid, name in fires.items():
        assert spec.action(name).label == rid
    report = mapping_report(spec, tmap)
    assert f"exec arity: {len(order_program.rules) + 1}" in report


def test_initial_database_with_containers(order_program):
    spec, _ = translate(order_program, ORDER_BOUNDS)
    orders = spec.initial.rel(att_rel("Order"))
    items = spec.initial.rel(att_rel("Item"))
    assert [t[:2] for t in orders] == [("o1", False)]
    assert sorted(t[:2] for t in items) == [("Item@1", True), ("Item@2", True)]
    assert len(spec.initial.rel(BLOCK)) == 3 and len(spec.initial.rel(EXEC)) == 3
    assert all(t[1] is False for t in spec.initial.rel(BLOCK))


def test_initial_round_trip(order_program, order_model):
    spec, tmap = translate(order_program, ORDER_BOUNDS)
    assert filter_state(tmap, spec.initial) == order_model.initial_snapshot
    spec2, tmap2 = translate(order_program)
    assert filter_state(tmap2, spec2.initial) == order_model.initial_snapshot


def test_too_many_initial_instances(order_program):
    with pytest.raises(ValueError):
        translate(order_program, {"Order": 0})


def test_filter_state_requires_unblocked(order_program):
    spec, tmap = translate(order_program, ORDER_BOUNDS)
    en = [e for e in enabled_actions(spec, spec.initial) if e.rule == "recv:itemRequest"]
    res = apply_action(spec, spec.initial, en[0].action, en[0].binding, _event_oracle(
        EventInstance("itemRequest", "o1")))
    blocked = res.successors[0]
    assert not is_unblocked(blocked)
    with pytest.raises(DcdsError):
        filter_state(tmap, blocked)


def _script(name):
    return parse_event_script((GOLDEN / name).read_text())


@pytest.mark.parametrize("bounds", [ORDER_BOUNDS, None])
def test_engine_and_dcds_agree_on_script(order_program, order_model, bounds):
    spec, tmap = translate(order_program, bounds)
    events = _script("order_happy.events")
    if bounds:
        # containers are claimed in id order, so the new id is the first free one
        events = [EventInstance(e.type, e.target, e.payload, "Item@1" if e.new_id else None) for e in events]
    db = spec.initial
    steps = run_script(order_program, order_model.initial_snapshot, events, containers=bounds)
    for e, (snap, _) in zip(events, steps):
        db = dcds_step(spec, db, e)
        assert aux_bound_violations(tmap, db) == []
        assert filter_state(tmap, db) == snap


def test_milestone_invalidated_on_reopen(order_program, order_model):
    spec, tmap = translate(order_program)
    events = [
        EventInstance("itemRequest", "o1"),
        EventInstance("add item", "o1", (("code", "A"), ("qty", 1)), "i1"),
        EventInstance("itemRequest", "o1"),
    ]
    db = spec.initial
    for e in events[:2]:
        db = dcds_step(spec, db, e)
    assert "item added" in filter_state(tmap, db).get("o1").achieved
    db = dcds_step(spec, db, events[2])
    o1 = filter_state(tmap, db).get("o1")
    assert "item added" not in o1.achieved and "Manage order" in o1.open
    final = run_script(order_program, order_model.initial_snapshot, events)[-1][0]
    assert filter_state(tmap, db) == final


def test_delete_then_create_reuses_container():
    program = compile_model(load_model(FIXTURES / "cart.gsm"))
    spec, tmap = translate(program, {"Cart": 1, "Item": 1})
    db = spec.initial
    script = [
        EventInstance("add", "c1"),
        EventInstance("add item", "c1", (("code", "x"),), "Item@1"),
        EventInstance("drop", "c1"),
        EventInstance("drop item", "c1"),
    ]
    for e in script:
        db = dcds_step(spec, db, e)
    snap = filter_state(tmap, db)
    assert snap.get("Item@1") is None and snap.get("c1").get("last") is None
    assert (att_rel("Item"), ("Item@1", True, None, None)) in db.facts
    db = dcds_step(spec, db, EventInstance("add", "c1"))
    db = dcds_step(spec, db, EventInstance("add item", "c1", (("code", "y"),), "Item@1"))
    snap = filter_state(tmap, db)
    assert snap.get("Item@1").get("code") == "y" and snap.get("c1").get("last") == "Item@1"


def test_create_waits_for_a_free_container():
    program = compile_model(load_model(FIXTURES / "cart.gsm"))
    spec, tmap = translate(program, {"Cart": 1, "Item": 1})
    db = spec.initial
    for e in [EventInstance("add", "c1"), EventInstance("add item", "c1", (("code", "x"),), "Item@1")]:
        db = dcds_step(spec, db, e)
    # reopen Adding by hand while the only Item container is taken
    row = next(iter(db.rel(att_rel("Cart"))))
    names = tmap.layout("Cart")
    forged = dict(zip(names, row))
    forged["Adding"] = True
    facts = (db.facts - {(att_rel("Cart"), row)}) | {(att_rel("Cart"), tuple(forged[n] for n in names))}
    assert not [e for e in enabled_actions(spec, DbInstance(facts)) if e.rule == "ret:add item"]
    forged_free = {f for f in facts if f[0] != att_rel("Item")} | {(att_rel("Item"), ("Item@1", True, None, None))}
    assert [e for e in enabled_actions(spec, DbInstance(forged_free)) if e.rule == "ret:add item"]


def test_initial_instances_must_fit_the_bound(order_program):
    from dataclasses import replace
    from gsmv.model import Snapshot, blank_instance
    m = order_program.model
    extra = blank_instance(m.type("Order"), "o2", {})
    model = replace(m, initial_snapshot=Snapshot(m.initial_snapshot.instances + (extra,)))
    with pytest.raises(TranslationError, match="bound is 1"):
        translate(compile_model(model), {"Order": 1, "Item": 1})
