import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsmv.engine import compile_model
from gsmv.mucalc import (
    Dia,
    Exists,
    Gone,
    Mu,
    PropertyError,
    alternation_depth,
    check,
    check_brute,
    format_formula,
    nnf,
    parse_property,
)
from gsmv.statespace import build_gsm_ts
from gsmv.syntax import load_model

from conftest import FIXTURES
from gen import make_ts, random_formula, random_ts

PROPS = {
    "receipt-before-pay":
        'mu Z. (achieved("receipt sent") & !achieved("Order paid")) | (!achieved("Order paid") & <-> Z)',
    "pay-reachable": 'mu Z. achieved("Order paid") | <-> Z',
    "receipt-after-pay": 'nu Z. (achieved("receipt sent") -> achieved("Order paid")) & [-] Z',
}


@pytest.fixture(scope="module")
def order_ts(order_program):
    return build_gsm_ts(order_program, containers={"Order": 1, "Item": 1})


@pytest.mark.parametrize("text", [
    "true",
    'mu Z. achieved("Halt") | <-> Z',
    'nu Z. open("Pay order") -> [pay] Z',
    '<"add item"> [-] false',
    'exists x. live(x) & inst(Item, x) & <-> (live(x) -> x.code != null)',
    'forall x. (live(x) & achieved("item added", x)) -> x.qty = "2"',
    'not (true & false | true)',
])
def test_format_parse_round_trip(text):
    f = parse_property(text)
    assert parse_property(format_formula(f)) == f


def test_precedence():
    f = parse_property("true | false & false")
    assert check(make_ts(_model(), [()], []), f).holds


def _model():
    return load_model(FIXTURES.parent.parent / "src" / "gsmv" / "corpus" / "order.gsm")


@pytest.mark.parametrize("text, message", [
    ('open("S", x)', "free first-order"),
    ("mu Z. !Z", "negatively"),
    ("mu Z. Y", "unbound fixpoint"),
    ('exists x. inst(Item, x) & <-> x.qty = "1"', "live"),
    ('exists x. live(x) & mu Z. (<-> (x.qty = "1") | Z)', "live"),
    ("mu Z. (true", "expected"),
    ("true true", "unexpected"),
])
def test_ill_formed(text, message):
    with pytest.raises(PropertyError, match=message):
        parse_property(text)


def test_guard_through_implication():
    parse_property('forall x. live(x) -> <-> (live(x) & inst(Item, x))')


@pytest.mark.parametrize("text, depth", [
    ('mu Z. achieved("Halt") | <-> Z', 1),
    ("nu X. mu Y. (<a> X | <b> Y)", 2),
    ("nu X. (mu Y. <a> Y) & [-] X", 1),
    ("mu X. nu Y. mu W. (<a> X | <b> Y | <-> W)", 3),
    ("true", 0),
])
def test_alternation_depth(text, depth):
    assert alternation_depth(parse_property(text)) == depth


def test_nnf_pushes_negation():
    f = nnf(parse_property('!(mu Z. achieved("Halt") | <-> Z)'))
    assert format_formula(f).startswith("nu Z.")


def test_order_verdicts(order_ts):
    assert not check(order_ts, PROPS["receipt-before-pay"]).holds
    assert check(order_ts, PROPS["receipt-after-pay"]).holds
    res = check(order_ts, PROPS["pay-reachable"])
    assert res.holds and res.witness_kind == "witness"
    labels = [e.label for e in res.witness]
    assert labels == ["itemRequest", "add item", "payRequest", "pay"]
    last = order_ts.snapshots[res.witness[-1].dst]
    assert "Order paid" in last.of_type("Order")[0].achieved


def test_counterexample_for_failed_invariant(order_ts):
    res = check(order_ts, 'nu Z. !achieved("receipt sent") & [-] Z')
    assert not res.holds and res.witness_kind == "counterexample"
    end = order_ts.snapshots[res.witness[-1].dst]
    assert "receipt sent" in end.of_type("Order")[0].achieved
    for a, b in zip(res.witness, res.witness[1:]):
        assert a.dst == b.src


def test_quantified_persistence(order_ts):
    stay = 'nu Z. (forall x. (live(x) & inst(Item, x)) -> [-] live(x)) & [-] Z'
    assert check(order_ts, stay).holds
    program = compile_model(load_model(FIXTURES / "cart.gsm"))
    cart = build_gsm_ts(program, containers={"Cart": 1, "Item": 1})
    assert not check(cart, stay).holds
    some = 'mu Z. (exists x. live(x) & inst(Item, x) & <"drop item"> (!live(x))) | <-> Z'
    assert check(cart, some).holds


def test_quantified_value_equality_follows_renaming(order_ts):
    # the code written into an item is read back after further steps
    f = ('nu Z. (forall x. (live(x) & inst(Item, x)) -> '
         '[-] (live(x) -> exists y. live(y) & inst(Item, y) & y.code = x.code)) & [-] Z')
    assert check(order_ts, f).holds


def test_gone_tokens_compare_by_identity():
    assert Gone(1) == Gone(1) and Gone(1) != Gone(2)


def test_truncated_system_is_refused(order_program):
    ts = build_gsm_ts(order_program, max_states=20)
    with pytest.raises(PropertyError, match="truncated"):
        check(ts, PROPS["pay-reachable"])
    # payment lies beyond the budget, so the bounded answer is negative
    assert not check(ts, PROPS["pay-reachable"], allow_truncated=True).holds


def test_brute_refuses_quantifiers_and_large_systems(order_ts):
    with pytest.raises(PropertyError):
        check_brute(order_ts, PROPS["pay-reachable"])
    with pytest.raises(PropertyError):
        check_brute(make_ts(_model(), [()], []), "exists x. live(x)")


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False))
def test_agrees_with_brute_force(rng):
    ts = random_ts(rng, _model(), max_states=8)
    f = random_formula(rng, depth=4)
    assert check(ts, f).holds == check_brute(ts, f)


def test_witness_of_mu_ends_in_base_case():
    ts = make_ts(_model(), [(), (), ("Order paid",)], [(0, "a", 1), (1, "b", 2), (0, "a", 0)])
    res = check(ts, 'mu Z. achieved("Order paid") | <-> Z')
    assert [e.label for e in res.witness] == ["a", "b"]
    assert isinstance(parse_property('mu Z. <a> Z'), Mu)
    assert isinstance(parse_property('exists x. live(x)'), Exists)
    assert isinstance(parse_property('<"add item"> true'), Dia)
