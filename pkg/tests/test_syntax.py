import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gsmv import corpus_path
from gsmv.model import EventInstance, ParseError, has_creation_tasks
from gsmv.syntax import (
    format_event_script,
    format_model,
    load_model,
    model_to_json,
    model_from_json,
    parse_event_script,
    parse_model,
)
from gsmv.turing import HALTING_2STATE, encode_turing_machine

from conftest import fixture_path

CORPUS = ["order", "order_nocreate", "turing_halting", "turing_looping"]


def test_order_model_shape(order_model):
    assert [t.name for t in order_model.artifact_types] == ["Order", "Item"]
    order = order_model.type("Order")
    assert order_model.type("Item").parent == "Order"
    assert [s.name for s in order.stages] == ["Manage order", "Pay order", "Deliver receipt"]
    assert all(s.atomic for s in order.stages)
    assert {"item added", "Order paid"} <= set(order.milestone_names())
    assert [e.name for e in order_model.event_types] == ["itemRequest", "payRequest"]


@pytest.mark.parametrize("name", CORPUS)
def test_text_round_trip(name):
    m = load_model(corpus_path(name))
    assert parse_model(format_model(m)) == m


@pytest.mark.parametrize("name", CORPUS)
def test_json_round_trip(name):
    m = load_model(corpus_path(name))
    data = json.loads(json.dumps(model_to_json(m)))
    assert model_from_json(data) == m


def test_load_json_file(tmp_path, order_model):
    p = tmp_path / "order.json"
    p.write_text(json.dumps(model_to_json(order_model)))
    assert load_model(p) == order_model


def test_empty_lifecycle_is_valid():
    m = load_model(fixture_path("empty_lifecycle.gsm"))
    assert m.type("A").stages == ()
    assert not has_creation_tasks(m)


@pytest.mark.parametrize("fixture, message, line", [
    ("unknown_event.gsm", "unknown event 'foo'", 4),
    ("duplicate_stage.gsm", "duplicate name", None),
    ("cyclic_hierarchy.gsm", "cyclic stage hierarchy", 3),
    ("two_tasks.gsm", "more than one task", 3),
    ("unknown_attribute.gsm", "unknown attribute 'y'", 5),
    ("cross_instance.gsm", "cross-instance read", 8),
])
def test_invalid_models_are_rejected(fixture, message, line):
    with pytest.raises(ParseError) as info:
        load_model(fixture_path(fixture))
    assert message in str(info.value)
    if line is not None:
        assert info.value.line == line


def test_syntax_error_position():
    with pytest.raises(ParseError) as info:
        parse_model("artifact A {\n  stage S {\n    guard on\n  }\n}\n")
    assert info.value.line == 4


def test_has_creation_tasks(order_model, nocreate_model):
    assert has_creation_tasks(order_model)
    assert not has_creation_tasks(nocreate_model)
    assert has_creation_tasks(encode_turing_machine(HALTING_2STATE))


def test_constants_collects_literals():
    m = load_model(corpus_path("turing_halting"))
    assert {"b", "q0", "qf", "1"} <= m.constants()


def test_event_script_parse():
    evs = parse_event_script('itemRequest target=o1 {}\n"add item" target=o1 {code=A7,qty=2} new=i1\n')
    assert evs == [
        EventInstance("itemRequest", "o1"),
        EventInstance("add item", "o1", (("code", "A7"), ("qty", "2")), "i1"),
    ]


def test_event_script_rejects_garbage():
    with pytest.raises(ParseError):
        parse_event_script("this is not an event\n")


_name = st.sampled_from(["itemRequest", "add item", "pay", "tick"])
_value = st.one_of(st.none(), st.text(alphabet="abcXYZ019", min_size=1, max_size=4))
_event = st.builds(
    EventInstance,
    _name,
    st.sampled_from(["o1", "m1", "x2"]),
    st.lists(st.tuples(st.sampled_from(["code", "qty", "v"]), _value), max_size=2, unique_by=lambda p: p[0])
    .map(tuple),
    st.one_of(st.none(), st.sampled_from(["i1", "c9"])),
)


@given(st.lists(_event, max_size=5))
def test_event_script_round_trip(events):
    assert parse_event_script(format_event_script(events)) == events
