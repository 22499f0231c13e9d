import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsmv import corpus_path
from gsmv.engine import compile_model
from gsmv.model import ChildExists, ParseError
from gsmv.pac import (
    CycleError,
    dependency_edges,
    derive_pac_rules,
    explain,
    is_linear_extension,
    linear_extensions,
    random_linear_extension,
    requires_toggled,
    stratify,
)
from gsmv.syntax import load_model, parse_model

from conftest import fixture_path

ONE_STAGE = """
event go -> A
artifact A {
  stage S {
    guard on go
    task t update { }
    milestone M achieved-by on done(t)
  }
}
"""


def _by_id(rules):
    return {r.id: r for r in rules}


def test_single_stage_template_count():
    rules = derive_pac_rules(parse_model(ONE_STAGE))
    assert sorted(r.template for r in rules) == ["T1", "T2", "T3", "T4", "T6"]


def test_invalidation_sentry_adds_t5():
    m = parse_model(ONE_STAGE.replace("achieved-by on done(t)", "achieved-by on done(t) invalidated-by on go"))
    assert Counter(r.template for r in derive_pac_rules(m))["T5"] == 1


def test_empty_lifecycle_has_no_rules():
    assert derive_pac_rules(load_model(fixture_path("empty_lifecycle.gsm"))) == []


def test_pay_order_guard_requires_an_item(order_model):
    rules = derive_pac_rules(order_model)
    pay = next(r for r in rules if r.template == "T1" and r.stage == "Pay order")
    (guard,) = pay.sentries
    assert guard.event.name == "payRequest"
    conds = guard.condition.args
    assert any(isinstance(c, ChildExists) and c.type == "Item" for c in conds)


def test_order_paid_precedes_deliver_receipt(order_program):
    order = order_program.order
    achieve = next(r.id for r in order_program.rules if r.template == "T2" and r.target == "Order paid")
    deliver = next(r.id for r in order_program.rules if r.template == "T1" and r.stage == "Deliver receipt")
    assert (achieve, deliver) in order.edges
    assert order.position(achieve) < order.position(deliver)


@pytest.mark.parametrize("name", ["order", "order_nocreate", "turing_halting", "turing_looping"])
def test_stratification_is_a_linear_extension(name):
    rules = derive_pac_rules(load_model(corpus_path(name)))
    order = stratify(rules)
    assert sorted(order.order) == sorted(r.id for r in rules)
    assert is_linear_extension(order.order, order.edges)


def test_independent_rules_follow_declaration_order():
    m = parse_model("""
event a -> A
event b -> A
artifact A {
  stage S1 {
    guard on a
  }
  stage S2 {
    guard on b
  }
}
""")
    rules = derive_pac_rules(m)
    order = stratify(rules)
    assert order.edges == frozenset()
    assert list(order.order) == [r.id for r in sorted(rules, key=lambda r: (r.owner, r.depth, r.index))]


def test_cycle_is_reported():
    m = load_model(fixture_path("cyclic_guards.gsm"))
    rules = derive_pac_rules(m)
    with pytest.raises(CycleError) as info:
        stratify(rules)
    cyc = info.value.cycle
    assert cyc[0] == cyc[-1] and len(cyc) >= 3
    edges = dependency_edges(rules)
    assert all((a, b) in edges for a, b in zip(cyc, cyc[1:]))


def test_opening_on_each_others_event_is_stratifiable():
    rules = derive_pac_rules(load_model(fixture_path("mutual_open_events.gsm")))
    stratify(rules)


def test_requires_toggled():
    m = load_model(fixture_path("mutual_open_events.gsm"))
    by = _by_id(derive_pac_rules(m))
    assert requires_toggled(by["A/T1/Q#0"]) == "P"
    assert requires_toggled(by["A/T1/P#0"]) is None
    assert requires_toggled(by["A/T3/P"]) == "P done"


def test_explain_lists_dependency(order_program):
    text = explain(order_program.rules, order_program.order)
    assert "Order/T2/Order paid -> Order/T1/Deliver receipt#0" in text
    assert '[on +"Order paid"]' in text


def test_linear_extensions_are_valid(order_program):
    ids = [r.id for r in order_program.rules]
    exts = linear_extensions(ids, order_program.order.edges, limit=25)
    assert len(exts) == 25 and len(set(exts)) == 25
    assert all(is_linear_extension(e, order_program.order.edges) for e in exts)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_random_linear_extension_is_valid(seed):
    m = load_model(corpus_path("turing_halting"))
    rules = derive_pac_rules(m)
    order = stratify(rules)
    ext = random_linear_extension([r.id for r in rules], order.edges, random.Random(seed))
    assert sorted(ext) == sorted(order.order)
    assert is_linear_extension(ext, order.edges)


def test_linear_extensions_exhaustive_small():
    # a -> c, b -> c: exactly two extensions
    assert linear_extensions(["a", "b", "c"], {("a", "c"), ("b", "c")}) == [("a", "b", "c"), ("b", "a", "c")]


def test_cyclic_model_rejected_by_parse_is_not_a_parse_error():
    # stratification failures surface as CycleError, not ParseError
    with pytest.raises(CycleError):
        compile_model(load_model(fixture_path("cyclic_guards.gsm")))
    with pytest.raises(ParseError):
        load_model(fixture_path("two_tasks.gsm"))
