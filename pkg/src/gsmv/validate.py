"""Structural validation of GSM models."""

from __future__ import annotations

from .model import (
    CREATE,
    DELETE,
    PARENT,
    REF,
    TASK_KINDS,
    Attr,
    ChildExists,
    GsmModel,
    ModelError,
    New,
    Param,
    ParseError,
    condition_children,
    condition_status_reads,
    condition_terms,
)


def validate(model: GsmModel, positions=None) -> GsmModel:
    """Raise :class:`ParseError` on the first violated invariant."""
    positions = positions or {}

    def fail(msg, obj=None):
        pos = positions.get(id(obj)) if obj is not None else None
        if pos is not None:
            raise ParseError(msg, pos[1], pos[2])
        raise ParseError(msg)

    def unique(names, what, obj=None):
        seen = set()
        for n in names:
            if n in seen:
                fail(f"duplicate name: {what} {n!r}", obj)
            seen.add(n)

    types = {t.name: t for t in model.artifact_types}
    unique([t.name for t in model.artifact_types], "artifact type")
    unique([e.name for e in model.event_types], "event")
    all_tasks = [task.name for t in model.artifact_types for task in t.tasks]
    unique(all_tasks, "task")
    for e in model.event_types:
        if e.name in all_tasks:
            fail(f"duplicate name: event {e.name!r} clashes with a task", e)

    for at in model.artifact_types:
        unique(at.attribute_names(), f"attribute in {at.name!r}")
        unique(at.stage_names() + at.milestone_names(), f"stage/milestone in {at.name!r}")
        if at.parent is not None:
            if at.parent not in types:
                fail(f"type {at.name!r} nested in unknown type {at.parent!r}")
            if at.stages:
                fail(f"nested type {at.name!r} must have an empty lifecycle")
        for a in at.attributes:
            if a.sort == REF and a.ref_type not in types:
                fail(f"attribute {a.name!r} references unknown type {a.ref_type!r}", a)
        _check_parent_chain(at, types, fail)

    for e in model.event_types:
        target = types.get(e.target)
        if target is None:
            fail(f"event {e.name!r} targets unknown artifact type {e.target!r}", e)
        if target.parent is not None:
            fail(f"event {e.name!r} targets nested type {e.target!r}", e)
        for p in e.payload:
            a = target.attribute(p)
            if a is None or p == PARENT:
                fail(f"event {e.name!r}: payload slot {p!r} is not an attribute of {e.target!r}", e)

    for at in model.artifact_types:
        _validate_lifecycle(model, at, types, fail)

    for inst in model.initial_snapshot.instances:
        at = types[inst.type]
        if at.parent is not None:
            par = model.initial_snapshot.get(inst.get(PARENT)) if inst.get(PARENT) else None
            if par is None or par.type != at.parent:
                fail(f"instance {inst.id!r} of nested type {at.name!r} needs a parent of type {at.parent!r}")
    return model


def _check_parent_chain(at, types, fail):
    seen = [at.name]
    cur = at.parent
    while cur is not None:
        if cur in seen:
            fail(f"cyclic nesting of types: {' -> '.join(seen + [cur])}")
        seen.append(cur)
        cur = types[cur].parent if cur in types else None


def _validate_lifecycle(model, at, types, fail):
    stage_names = set(at.stage_names())
    milestone_names = set(at.milestone_names())
    children = {t.name for t in model.child_types(at.name)}
    task_names = {t.name for t in at.tasks}
    one_way = {e.name for e in model.event_types if e.target == at.name}
    used_tasks = []

    def check_term(term, obj, in_exists=None, allow_param=(), allow_new=False):
        if isinstance(term, Param):
            if term.name not in allow_param:
                fail(f"payload slot ${term.name} is not returned by the task", obj)
        elif isinstance(term, New):
            if not allow_new:
                fail("'new' only allowed in the 'then' block of a create task", obj)
        elif isinstance(term, Attr):
            if term.ref is None:
                if at.attribute(term.name) is None:
                    fail(f"unknown attribute {term.name!r} in {at.name!r}", term)
            elif term.ref == "it":
                if in_exists is None:
                    fail("'it' used outside of an exists clause", term)
                if types[in_exists].attribute(term.name) is None:
                    fail(f"unknown attribute {term.name!r} in {in_exists!r}", term)
            else:
                ref = at.attribute(term.ref)
                if ref is None or ref.sort != REF:
                    fail(f"{term.ref!r} is not an id-ref attribute of {at.name!r}", term)
                if ref.ref_type not in children:
                    fail(f"cross-instance read through {term.ref!r} is unsupported "
                         f"(only nested types of {at.name!r} may be dereferenced)", term)
                if types[ref.ref_type].attribute(term.name) is None:
                    fail(f"unknown attribute {term.name!r} in {ref.ref_type!r}", term)

    def check_condition(cond, obj):
        for name in condition_status_reads(cond):
            if name not in stage_names and name not in milestone_names:
                fail(f"unknown stage or milestone {name!r}", obj)
        for child in condition_children(cond):
            if child not in children:
                fail(f"exists over {child!r}, which is not a nested type of {at.name!r}", obj)
        _check_cond_terms(cond, None, check_term, obj)

    def check_sentry(s):
        if s.event is None and s.condition is None:
            fail("sentry needs an event or a condition", s)
        if s.event is not None:
            e = s.event
            if e.kind == "external" and e.name not in one_way:
                fail(f"unknown event {e.name!r} for artifact type {at.name!r}", e)
            if e.kind == "done" and e.name not in task_names:
                fail(f"unknown task {e.name!r}", e)
            if e.kind == "internal" and e.name not in stage_names | milestone_names:
                fail(f"unknown stage or milestone {e.name!r}", e)
        if s.condition is not None:
            check_condition(s.condition, s)

    for stage, _, _ in at.walk_stages():
        if not stage.guards:
            fail(f"stage {stage.name!r} has no guard", stage)
        for g in stage.guards:
            check_sentry(g)
        for m in stage.milestones:
            if not m.achieving:
                fail(f"milestone {m.name!r} has no achieving sentry", m)
            for s in m.achieving + m.invalidating:
                check_sentry(s)
        if stage.task is not None:
            if not stage.atomic:
                fail(f"composite stage {stage.name!r} cannot carry a task", stage)
            if stage.task not in task_names:
                fail(f"unknown task {stage.task!r}", stage)
            used_tasks.append(stage.task)
    for name in task_names:
        if used_tasks.count(name) != 1:
            fail(f"task {name!r} must belong to exactly one atomic stage")

    for task in at.tasks:
        if task.kind not in TASK_KINDS:
            fail(f"task {task.name!r}: unknown kind {task.kind!r}", task)
        outputs = set(task.outputs)
        if len(outputs) != len(task.outputs):
            fail(f"task {task.name!r}: duplicate payload slot", task)
        for t in task.inputs:
            check_term(t, task)
        if task.kind in (CREATE, DELETE):
            if task.target_type not in types:
                fail(f"task {task.name!r} names undeclared artifact type {task.target_type!r}", task)
            if task.target_type not in children:
                fail(f"task {task.name!r}: {task.target_type!r} is not a nested type of {at.name!r}", task)
        if task.kind == CREATE:
            target = types[task.target_type]
            for k, src in task.init:
                if target.attribute(k) is None or k == PARENT:
                    fail(f"task {task.name!r}: {k!r} is not an attribute of {target.name!r}", task)
                check_term(src, task, allow_param=outputs)
        if task.kind == DELETE:
            v = task.victim
            if not isinstance(v, Attr) or v.ref == "it":
                fail(f"task {task.name!r}: victim must be an id-ref attribute term", task)
            check_term(v, task)
        refs = set()
        for tgt, src in task.assign:
            check_term(tgt, task)
            if tgt.ref is not None:
                refs.add(tgt.ref)
            check_term(src, task, allow_param=outputs, allow_new=task.kind == CREATE)
        if len(refs) > 1:
            fail(f"task {task.name!r} writes through more than one id-ref attribute", task)


def _check_cond_terms(cond, scope, check_term, obj):
    from .model import And, Cmp, IsNull, Not, Or

    if isinstance(cond, Cmp):
        for t in (cond.left, cond.right):
            if isinstance(t, (Param, New)):
                raise ParseError("payload slots and 'new' are not allowed in conditions")
            check_term(t, obj, scope)
    elif isinstance(cond, IsNull):
        if isinstance(cond.term, (Param, New)):
            raise ParseError("payload slots and 'new' are not allowed in conditions")
        check_term(cond.term, obj, scope)
    elif isinstance(cond, ChildExists):
        if cond.where is not None:
            _check_cond_terms(cond.where, cond.type, check_term, obj)
    elif isinstance(cond, Not):
        _check_cond_terms(cond.arg, scope, check_term, obj)
    elif isinstance(cond, (And, Or)):
        for a in cond.args:
            _check_cond_terms(a, scope, check_term, obj)


__all__ = ["validate", "ModelError"]
