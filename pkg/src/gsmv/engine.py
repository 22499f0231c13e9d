"""Incremental B-step semantics.

A B-step incorporates one incoming event into a stable snapshot and then
walks the stratified rule order once: each rule whose prerequisite held in
the initial snapshot fires if its antecedent holds in the current
pre-snapshot.  Outgoing service calls are collected and returned with the
trace; the returned snapshot is stable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Optional

from .model import (
    CREATE,
    DELETE,
    ONE_WAY,
    PARENT,
    And,
    Attr,
    ChildExists,
    Cmp,
    Const,
    EventInstance,
    GsmModel,
    InstanceState,
    IsNull,
    New,
    Not,
    Or,
    Param,
    Snapshot,
    StatusAtom,
    TrueCond,
    blank_instance,
)
from .pac import RuleOrder, derive_pac_rules, stratify


class EngineError(Exception):
    pass


@dataclass(frozen=True)
class Program:
    """A model together with its compiled rules and their firing order."""

    model: GsmModel
    rules: tuple
    order: RuleOrder

    @property
    def by_id(self) -> dict:
        return {r.id: r for r in self.rules}

    def rules_for(self, type_name, order=None) -> list:
        by_id = self.by_id
        ids = order if order is not None else self.order.order
        return [by_id[i] for i in ids if by_id[i].owner == type_name]


def compile_model(model: GsmModel) -> Program:
    rules = tuple(derive_pac_rules(model))
    return Program(model, rules, stratify(rules))


@dataclass(frozen=True)
class MicroStep:
    rule: str
    pre: str
    post: str
    toggled: Optional[str] = None

    def to_json(self) -> dict:
        return {"rule": self.rule, "pre": self.pre, "post": self.post, "toggled": self.toggled}


@dataclass(frozen=True)
class BStepTrace:
    event: EventInstance
    micro_steps: tuple = ()
    outgoing: tuple = ()

    def toggled(self) -> list:
        return [m.toggled for m in self.micro_steps if m.toggled is not None]

    def to_json(self) -> list:
        return [dict(m.to_json(), event=str(self.event)) for m in self.micro_steps] + [
            {"rule": "send", "outgoing": [str(e) for e in self.outgoing], "event": str(self.event)}
        ]

    def to_text(self) -> str:
        lines = [f"B-step on {self.event}"]
        for m in self.micro_steps:
            tog = f" toggles {m.toggled}" if m.toggled else ""
            lines.append(f"  {m.rule}: {m.pre} -> {m.post}{tog}")
        for e in self.outgoing:
            lines.append(f"  send {e}")
        return "\n".join(lines)


def snapshot_hash(s: Snapshot) -> str:
    data = [
        [i.id, i.type, [[k, v] for k, v in i.values], sorted(i.open), sorted(i.achieved)]
        for i in s.instances
    ]
    raw = json.dumps(data, separators=(",", ":")).encode()
    return hashlib.blake2b(raw, digest_size=8).hexdigest()


# --------------------------------------------------------------------------
# conditions


def term_value(term, snap: Snapshot, inst: InstanceState, it=None, params=None, new_id=None):
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Param):
        return (params or {}).get(term.name)
    if isinstance(term, New):
        return new_id
    if term.ref is None:
        return inst.get(term.name)
    if term.ref == "it":
        return it.get(term.name) if it is not None else None
    target = snap.get(inst.get(term.ref)) if inst.get(term.ref) is not None else None
    return target.get(term.name) if target is not None else None


def eval_condition(cond, snap: Snapshot, inst: InstanceState, it=None) -> bool:
    if isinstance(cond, TrueCond):
        return True
    if isinstance(cond, Cmp):
        eq = term_value(cond.left, snap, inst, it) == term_value(cond.right, snap, inst, it)
        return eq if cond.op == "=" else not eq
    if isinstance(cond, IsNull):
        isnull = term_value(cond.term, snap, inst, it) is None
        return not isnull if cond.negated else isnull
    if isinstance(cond, StatusAtom):
        return cond.name in (inst.open if cond.kind == "open" else inst.achieved)
    if isinstance(cond, ChildExists):
        return any(
            cond.where is None or eval_condition(cond.where, snap, inst, child)
            for child in snap.children(inst.id, cond.type)
        )
    if isinstance(cond, Not):
        return not eval_condition(cond.arg, snap, inst, it)
    if isinstance(cond, And):
        return all(eval_condition(a, snap, inst, it) for a in cond.args)
    if isinstance(cond, Or):
        return any(eval_condition(a, snap, inst, it) for a in cond.args)
    raise TypeError(cond)


def status_of(inst: InstanceState, name) -> bool:
    return name in inst.open or name in inst.achieved


def set_status(at, inst: InstanceState, name, value) -> InstanceState:
    if name in at.stage_names():
        s = inst.open | {name} if value else inst.open - {name}
        return replace(inst, open=frozenset(s))
    a = inst.achieved | {name} if value else inst.achieved - {name}
    return replace(inst, achieved=frozenset(a))


def sentry_holds(sentry, snap, inst, incoming: tuple, toggled: dict) -> bool:
    """``incoming`` is ``(kind, name)`` of the B-step's event, frozen."""
    ev = sentry.event
    if ev is not None:
        if ev.kind == "internal":
            if toggled.get(ev.name) != (ev.sign == "+"):
                return False
        elif (ev.kind, ev.name) != incoming:
            return False
    return sentry.condition is None or eval_condition(sentry.condition, snap, inst)


def prerequisite_holds(rule, initial: InstanceState) -> bool:
    return all(status_of(initial, n) == v for n, v in rule.prerequisite)


def antecedent_holds(rule, snap, inst, incoming, toggled) -> bool:
    if rule.untoggled is not None and rule.untoggled in toggled:
        return False
    if not all(status_of(inst, n) == v for n, v in rule.status):
        return False
    if rule.events_any and not any(toggled.get(n) == (s == "+") for s, n in rule.events_any):
        return False
    if rule.sentries and not any(sentry_holds(s, snap, inst, incoming, toggled) for s in rule.sentries):
        return False
    return True


# --------------------------------------------------------------------------
# event incorporation


def event_kind(model: GsmModel, inst: InstanceState, etype: str) -> tuple:
    """Classify an event type for ``inst``: ``("external", E)`` or ``("done", task)``."""
    et = model.event_type(etype)
    if et is not None and et.kind == ONE_WAY:
        if et.target != inst.type:
            raise EngineError(f"event type mismatch: {etype!r} targets {et.target!r}, "
                              f"instance {inst.id!r} is a {inst.type!r}")
        return ("external", etype)
    at = model.type(inst.type)
    if at.task(etype) is not None:
        return ("done", etype)
    raise EngineError(f"event type mismatch: {etype!r} is not an event or task of {inst.type!r}")


def return_admissible(model, snap, inst, task_name, containers=None) -> bool:
    at = model.type(inst.type)
    task = at.task(task_name)
    if at.stage_of_task(task_name).name not in inst.open:
        return False
    if task.kind == CREATE and containers is not None:
        bound = containers.get(task.target_type)
        if bound is not None and len(snap.of_type(task.target_type)) >= bound:
            return False
    if task.kind == DELETE:
        victim = term_value(task.victim, snap, inst)
        if victim is None or snap.get(victim) is None:
            return False
    return True


def fresh_id(snap: Snapshot, type_name: str, avoid=()) -> str:
    """An identifier not used as an id or value in ``snap`` nor in ``avoid``."""
    used = set(avoid)
    for i in snap.instances:
        used.add(i.id)
        used.update(v for _, v in i.values)
    base = type_name[:1].lower() or "x"
    n = 1
    while f"{base}{n}" in used:
        n += 1
    return f"{base}{n}"


def incorporate(model, snap: Snapshot, inst: InstanceState, event: EventInstance, kind, containers=None):
    """Write the payload into the snapshot; returns the pre-snapshot Σ1."""
    at = model.type(inst.type)
    payload = event.payload_dict()
    if kind[0] == "external":
        et = model.event_type(event.type)
        unknown = set(payload) - set(et.payload)
        if unknown:
            raise EngineError(f"payload of {event.type!r} has undeclared slots {sorted(unknown)}")
        return snap.replace_instance(inst.with_values({k: payload.get(k) for k in et.payload}))

    task = at.task(event.type)
    unknown = set(payload) - set(task.outputs)
    if unknown:
        raise EngineError(f"return of {task.name!r} has undeclared slots {sorted(unknown)}")
    if not return_admissible(model, snap, inst, task.name, containers):
        if task.kind == CREATE and at.stage_of_task(task.name).name in inst.open:
            raise EngineError(f"no free container for {task.target_type!r}")
        raise EngineError(f"unexpected return of {task.name!r}: no pending call on {inst.id!r}")
    new_id = None
    out = snap
    if task.kind == CREATE:
        new_id = event.new_id or fresh_id(snap, task.target_type, set(payload.values()) | model.constants())
        if new_id in snap:
            raise EngineError(f"identifier {new_id!r} already in use")
        values = {k: term_value(src, snap, inst, params=payload) for k, src in task.init}
        values[PARENT] = inst.id
        out = out.add_instance(blank_instance(model.type(task.target_type), new_id, values))
    victim = None
    if task.kind == DELETE:
        victim = term_value(task.victim, snap, inst)
        out = out.remove_instance(victim)

    # sources are read from the snapshot before any write
    own, through = {}, {}
    for tgt, src in task.assign:
        v = term_value(src, snap, inst, params=payload, new_id=new_id)
        if tgt.ref is None:
            own[tgt.name] = v
        else:
            through.setdefault(tgt.ref, {})[tgt.name] = v
    if victim is not None:
        for a in at.attributes:
            if inst.get(a.name) == victim and a.name not in own and a.name != PARENT:
                own[a.name] = None
    out = out.replace_instance(out.get(inst.id).with_values(own))
    for ref, updates in through.items():
        child_id = inst.get(ref)
        child = out.get(child_id) if child_id is not None else None
        if child is not None:
            out = out.replace_instance(child.with_values(updates))
    return out


# --------------------------------------------------------------------------
# B-steps


def b_step(program: Program, s: Snapshot, e: EventInstance, order=None, containers=None):
    """Process one incoming event; returns ``(stable snapshot, trace)``.

    ``order`` overrides the firing order (any linear extension of the
    dependency DAG); ``containers`` maps type names to instance bounds.
    """
    model = program.model
    inst = s.get(e.target)
    if inst is None:
        raise EngineError(f"event targets unknown instance {e.target!r}")
    kind = event_kind(model, inst, e.type)
    at = model.type(inst.type)
    pre_hash = snapshot_hash(s)
    cur = incorporate(model, s, inst, e, kind, containers)
    steps = [MicroStep("incorporate", pre_hash, snapshot_hash(cur))]
    initial = inst
    toggled = {}
    outgoing = []
    for rule in program.rules_for(at.name, order):
        if not prerequisite_holds(rule, initial):
            continue
        me = cur.get(inst.id)
        if not antecedent_holds(rule, cur, me, kind, toggled):
            continue
        before = snapshot_hash(cur)
        if rule.dispatch:
            task = at.task(rule.target)
            payload = tuple((f"in{i}", term_value(t, cur, me)) for i, t in enumerate(task.inputs))
            outgoing.append(EventInstance(task.name, inst.id, payload))
            steps.append(MicroStep(rule.id, before, before))
        else:
            cur = cur.replace_instance(set_status(at, me, rule.target, rule.value))
            toggled[rule.target] = rule.value
            steps.append(MicroStep(rule.id, before, snapshot_hash(cur), rule.target))
    return cur, BStepTrace(e, tuple(steps), tuple(outgoing))


class ScriptError(EngineError):
    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        super().__init__(f"event #{index}: {cause}")


def run_script(program: Program, s0: Snapshot, events, containers=None) -> list:
    """Fold :func:`b_step` over ``events``; returns one (snapshot, trace) per event."""
    out = []
    cur = s0
    for i, e in enumerate(events):
        try:
            cur, trace = b_step(program, cur, e, containers=containers)
        except EngineError as exc:
            raise ScriptError(i, exc) from exc
        out.append((cur, trace))
    return out
