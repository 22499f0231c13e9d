"""Text and JSON model formats: tokenizer, recursive-descent parser, printer.

See docs/model-format.md for the grammar.  Both formats go through
:func:`gsmv.validate.validate`, so every invariant is checked in one place.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .model import (
    CREATE,
    DELETE,
    NULL,
    PARENT,
    REF,
    SCALAR,
    UPDATE,
    And,
    ArtifactType,
    Attr,
    AttributeDecl,
    ChildExists,
    Cmp,
    Const,
    EventInstance,
    EventRef,
    EventType,
    GsmModel,
    IsNull,
    Milestone,
    New,
    Not,
    Or,
    Param,
    ParseError,
    Sentry,
    Snapshot,
    Stage,
    StatusAtom,
    Task,
    TrueCond,
    blank_instance,
)
from .validate import validate

KEYWORDS = {
    "model", "event", "artifact", "nested", "attribute", "ref", "stage", "within",
    "guard", "milestone", "achieved-by", "invalidated-by", "task", "update",
    "create", "delete", "then", "returns", "inputs", "instance", "parent", "on",
    "if", "and", "or", "not", "is", "null", "true", "false", "exists", "where",
    "open", "achieved", "done", "new",
}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<const>'[^'\n]*')
  | (?P<op>->|!=|[{}(),=:.+\-$])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)
    """,
    re.VERBOSE,
)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind, self.text, self.line, self.col = kind, text, line, col

    def __repr__(self):
        return f"Token({self.kind},{self.text!r},{self.line}:{self.col})"


def tokenize(text: str) -> list:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind not in ("ws", "comment"):
                tokens.append(Token(kind, lexeme, line, col))
            col += len(lexeme)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0
        self.positions = {}

    # -- token helpers ----------------------------------------------------
    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def at(self, *texts):
        t = self.tok
        return t.kind in ("ident", "op") and t.text in texts

    def accept(self, text):
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")

    def name(self, what="name"):
        """A bare identifier or a double-quoted string."""
        t = self.tok
        if t.kind == "string":
            self.i += 1
            return t.text[1:-1]
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.i += 1
            return t.text
        self.error(f"expected {what}, found {t.text or 'end of input'!r}")

    def ident(self, what="identifier"):
        t = self.tok
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.i += 1
            return t.text
        self.error(f"expected {what}, found {t.text or 'end of input'!r}")

    def mark(self, obj, tok):
        self.positions[id(obj)] = (obj, tok.line, tok.col)
        return obj

    # -- top level --------------------------------------------------------
    def parse_file(self) -> dict:
        spec = {"model": "model", "events": [], "artifacts": [], "instances": []}
        if self.accept("model"):
            spec["model"] = self.name("model name")
        while self.tok.kind != "eof":
            if self.accept("event"):
                spec["events"].append(self.event_decl())
            elif self.accept("artifact"):
                spec["artifacts"].extend(self.artifact_decl(None))
            elif self.accept("instance"):
                spec["instances"].append(self.instance_decl())
            else:
                self.error(f"expected 'event', 'artifact' or 'instance', found {self.tok.text!r}")
        return spec

    def event_decl(self):
        tok = self.tok
        name = self.name("event name")
        self.expect("->")
        target = self.name("artifact type")
        payload = ()
        if self.accept("("):
            payload = tuple(self.name_list(")"))
        return self.mark(EventType(name, target, payload), tok)

    def name_list(self, close):
        names = []
        if not self.accept(close):
            names.append(self.name())
            while self.accept(","):
                names.append(self.name())
            self.expect(close)
        return names

    def artifact_decl(self, parent):
        """Returns a list: the type itself followed by its nested types."""
        tok = self.tok
        name = self.name("artifact type name")
        if parent is None and self.accept("parent"):
            parent = self.name("parent type")
        self.expect("{")
        attrs, stages, nested = [], [], []
        while not self.accept("}"):
            t = self.tok
            if self.accept("attribute"):
                attrs.append(self.attribute_decl())
            elif self.accept("nested"):
                nested.extend(self.artifact_decl(name))
            elif self.accept("stage"):
                stages.append(self.stage_decl())
            elif t.kind == "eof":
                self.error("unterminated artifact block")
            else:
                self.error(f"unexpected {t.text!r} in artifact {name!r}")
        if parent is not None:
            attrs.insert(0, AttributeDecl(PARENT, REF, parent))
        return [self.mark({"name": name, "parent": parent, "attributes": attrs, "stages": stages}, tok)] + nested

    def attribute_decl(self):
        tok = self.tok
        name = self.name("attribute name")
        if self.accept(":"):
            self.expect("ref")
            return self.mark(AttributeDecl(name, REF, self.name("type")), tok)
        return self.mark(AttributeDecl(name, SCALAR), tok)

    def stage_decl(self):
        tok = self.tok
        name = self.name("stage name")
        within = self.name("stage name") if self.accept("within") else None
        self.expect("{")
        guards, milestones, subs, tasks = [], [], [], []
        while not self.accept("}"):
            t = self.tok
            if self.accept("guard"):
                guards.append(self.sentry())
            elif self.accept("milestone"):
                milestones.append(self.milestone_decl())
            elif self.accept("stage"):
                subs.append(self.stage_decl())
            elif self.accept("task"):
                tasks.append(self.task_decl())
            elif t.kind == "eof":
                self.error("unterminated stage block")
            else:
                self.error(f"unexpected {t.text!r} in stage {name!r}")
        if len(tasks) > 1:
            self.error(f"stage {name!r} contains more than one task", tok)
        st = {"name": name, "within": within, "guards": guards, "milestones": milestones,
              "substages": subs, "task": tasks[0] if tasks else None}
        return self.mark(st, tok)

    def milestone_decl(self):
        tok = self.tok
        name = self.name("milestone name")
        achieving, invalidating = [], []
        while True:
            if self.accept("achieved-by"):
                achieving.append(self.sentry())
            elif self.accept("invalidated-by"):
                invalidating.append(self.sentry())
            else:
                break
        return self.mark(Milestone(name, tuple(achieving), tuple(invalidating)), tok)

    def task_decl(self):
        tok = self.tok
        name = self.name("task name")
        target, init, assign, victim = None, (), (), None
        if self.accept("update"):
            kind = UPDATE
            assign = self.assign_block()
        elif self.accept("create"):
            kind = CREATE
            target = self.name("artifact type")
            init = tuple((a.name, src) for a, src in self.assign_block())
            if self.accept("then"):
                assign = self.assign_block()
        elif self.accept("delete"):
            kind = DELETE
            target = self.name("artifact type")
            victim = self.term()
            if self.accept("then"):
                assign = self.assign_block()
        else:
            self.error("expected 'update', 'create' or 'delete'")
        inputs, outputs = (), ()
        if self.accept("inputs"):
            self.expect("(")
            items = []
            if not self.accept(")"):
                items.append(self.term())
                while self.accept(","):
                    items.append(self.term())
                self.expect(")")
            inputs = tuple(items)
        if self.accept("returns"):
            self.expect("(")
            outputs = tuple(self.name_list(")"))
        task = Task(name, kind, target, outputs, inputs, init, assign, victim)
        return self.mark(task, tok)

    def assign_block(self):
        self.expect("{")
        out = []
        if not self.accept("}"):
            out.append(self.assignment())
            while self.accept(","):
                out.append(self.assignment())
            self.expect("}")
        return tuple(out)

    def assignment(self):
        tok = self.tok
        target = self.term()
        if not isinstance(target, Attr):
            self.error("assignment target must be an attribute", tok)
        self.expect("=")
        return (target, self.term())

    def instance_decl(self):
        tok = self.tok
        type_name = self.name("artifact type")
        iid = self.ident("instance id")
        parent = self.ident("instance id") if self.accept("parent") else None
        self.expect("{")
        values = {}
        if not self.accept("}"):
            while True:
                k = self.name("attribute")
                self.expect("=")
                values[k] = self.constant()
                if not self.accept(","):
                    break
            self.expect("}")
        return self.mark({"type": type_name, "id": iid, "parent": parent, "values": values}, tok)

    # -- sentries and conditions -----------------------------------------
    def sentry(self):
        tok = self.tok
        event = cond = None
        if self.accept("on"):
            event = self.event_ref()
        if self.accept("if"):
            cond = self.condition()
        if event is None and cond is None:
            self.error("sentry needs 'on EVENT' and/or 'if CONDITION'", tok)
        return self.mark(Sentry(event, cond), tok)

    def event_ref(self):
        tok = self.tok
        if self.accept("+"):
            ref = EventRef("internal", self.name(), "+")
        elif self.accept("-"):
            ref = EventRef("internal", self.name(), "-")
        elif self.accept("done"):
            self.expect("(")
            ref = EventRef("done", self.name("task name"))
            self.expect(")")
        else:
            ref = EventRef("external", self.name("event name"))
        return self.mark(ref, tok)

    def condition(self):
        args = [self.conjunction()]
        while self.accept("or"):
            args.append(self.conjunction())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conjunction(self):
        args = [self.negation()]
        while self.accept("and"):
            args.append(self.negation())
        return args[0] if len(args) == 1 else And(tuple(args))

    def negation(self):
        if self.accept("not"):
            return Not(self.negation())
        return self.atom()

    def atom(self):
        tok = self.tok
        if self.accept("("):
            c = self.condition()
            self.expect(")")
            return c
        if self.accept("true"):
            return TrueCond()
        if self.accept("false"):
            return Not(TrueCond())
        if self.at("open", "achieved"):
            kind = self.tok.text
            self.i += 1
            self.expect("(")
            name = self.name()
            self.expect(")")
            return self.mark(StatusAtom(kind, name), tok)
        if self.accept("exists"):
            type_name = self.name("artifact type")
            where = None
            if self.accept("where"):
                self.expect("(")
                where = self.condition()
                self.expect(")")
            return self.mark(ChildExists(type_name, where), tok)
        left = self.term()
        if self.accept("is"):
            negated = self.accept("not")
            self.expect("null")
            return self.mark(IsNull(left, negated), tok)
        if self.accept("="):
            return self.mark(Cmp("=", left, self.term()), tok)
        if self.accept("!="):
            return self.mark(Cmp("!=", left, self.term()), tok)
        self.error("expected '=', '!=' or 'is' after term")

    def term(self):
        tok = self.tok
        if tok.kind == "const":
            self.i += 1
            return Const(tok.text[1:-1])
        if self.accept("null"):
            return NULL
        if self.accept("new"):
            return New()
        if self.accept("$"):
            return Param(self.ident("payload slot"))
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.i += 1
            if self.accept("."):
                return self.mark(Attr(self.ident("attribute"), tok.text), tok)
            return self.mark(Attr(tok.text), tok)
        self.error(f"expected a term, found {tok.text or 'end of input'!r}")

    def constant(self):
        tok = self.tok
        if tok.kind == "const":
            self.i += 1
            return tok.text[1:-1]
        if self.accept("null"):
            return None
        self.error("expected a quoted constant or null")


# --------------------------------------------------------------------------
# assembly: flat spec dicts -> GsmModel


def _assemble_stages(stage_dicts, type_name, err):
    """Build the stage forest, attaching ``within`` stages to their parent."""
    tasks = []

    def build(d, path):
        if d["name"] in path:
            err(f"cyclic stage hierarchy in {type_name!r}: {' -> '.join(path + [d['name']])}", d)
        subs = [build(s, path + [d["name"]]) for s in d["substages"]]
        subs += [build(s, path + [d["name"]]) for s in children.get(d["name"], [])]
        task = d["task"]
        if task is not None:
            tasks.append(task)
        return Stage(d["name"], tuple(d["guards"]), tuple(d["milestones"]), tuple(subs),
                     task.name if task is not None else None)

    children = {}
    roots = []
    for d in stage_dicts:
        if d.get("within"):
            children.setdefault(d["within"], []).append(d)
        else:
            roots.append(d)
    known = set()

    def collect(d):
        known.add(d["name"])
        for s in d["substages"]:
            collect(s)

    for d in stage_dicts:
        collect(d)
    for parent, kids in children.items():
        if parent not in known:
            err(f"stage {kids[0]['name']!r} is within unknown stage {parent!r}", kids[0])
    built = [build(d, []) for d in roots]
    # stages reachable only through a within-cycle never hang off a root
    reached = {s.name for b in built for s in _walk(b)}
    for d in stage_dicts:
        if d["name"] not in reached:
            path = [d["name"]]
            cur = d.get("within")
            while cur and cur not in path:
                path.append(cur)
                cur = next((x.get("within") for x in stage_dicts if x["name"] == cur), None)
            err(f"cyclic stage hierarchy in {type_name!r}: {' -> '.join(path + [cur or ''])}", d)
    return tuple(built), tuple(tasks)


def _walk(stage):
    yield stage
    for s in stage.substages:
        yield from _walk(s)


def _family_order(types):
    """Each top-level type followed by its nested types, depth first."""
    out, seen = [], set()

    def add(t):
        if t.name in seen:
            return
        seen.add(t.name)
        out.append(t)
        for c in types:
            if c.parent == t.name:
                add(c)

    for t in types:
        if t.parent is None or not any(p.name == t.parent for p in types):
            add(t)
    for t in types:
        add(t)
    return out


def build_model(spec: dict, positions=None) -> GsmModel:
    positions = positions or {}

    def err(msg, obj=None):
        pos = positions.get(id(obj)) if obj is not None else None
        if pos is not None:
            raise ParseError(msg, pos[1], pos[2])
        raise ParseError(msg)

    types = []
    for a in spec["artifacts"]:
        stages, tasks = _assemble_stages(a["stages"], a["name"], err)
        types.append(ArtifactType(a["name"], tuple(a["attributes"]), stages, tasks, a["parent"]))
    types = _family_order(types)
    by_name = {}
    for t in types:
        by_name.setdefault(t.name, t)
    instances = []
    for d in spec["instances"]:
        at = by_name.get(d["type"])
        if at is None:
            err(f"instance {d['id']!r} of unknown artifact type {d['type']!r}", d)
        values = dict(d["values"])
        if d.get("parent") is not None:
            values[PARENT] = d["parent"]
        for k in values:
            if at.attribute(k) is None:
                err(f"instance {d['id']!r}: unknown attribute {k!r}", d)
        instances.append(blank_instance(at, d["id"], values))
    ids = [i.id for i in instances]
    for iid in ids:
        if ids.count(iid) > 1:
            err(f"duplicate name: instance id {iid!r}")
    model = GsmModel(spec["model"], tuple(types), tuple(spec["events"]), Snapshot(tuple(instances)))
    validate(model, positions)
    return model


def parse_model(text: str) -> GsmModel:
    """Parse and validate a model in the block-structured text format."""
    p = _Parser(text)
    spec = p.parse_file()
    return build_model(spec, p.positions)


def parse_condition(text: str):
    p = _Parser(text)
    c = p.condition()
    if p.tok.kind != "eof":
        p.error(f"trailing input {p.tok.text!r}")
    return c


def parse_term(text: str):
    p = _Parser(text)
    t = p.term()
    if p.tok.kind != "eof":
        p.error(f"trailing input {p.tok.text!r}")
    return t


def _parse_sentry_text(text: str) -> Sentry:
    p = _Parser(text)
    s = p.sentry()
    if p.tok.kind != "eof":
        p.error(f"trailing input {p.tok.text!r}")
    return s


# --------------------------------------------------------------------------
# printing


def _q(name):
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name) and name not in KEYWORDS:
        return name
    return f'"{name}"'


def format_term(t) -> str:
    if isinstance(t, Const):
        return "null" if t.value is None else f"'{t.value}'"
    if isinstance(t, Param):
        return f"${t.name}"
    if isinstance(t, New):
        return "new"
    if t.ref is not None:
        return f"{t.ref}.{t.name}"
    return t.name


def format_condition(c, prec=0) -> str:
    if isinstance(c, TrueCond):
        return "true"
    if isinstance(c, Cmp):
        return f"{format_term(c.left)} {c.op} {format_term(c.right)}"
    if isinstance(c, IsNull):
        return f"{format_term(c.term)} is {'not ' if c.negated else ''}null"
    if isinstance(c, StatusAtom):
        return f"{c.kind}({_q(c.name)})"
    if isinstance(c, ChildExists):
        where = f" where ({format_condition(c.where)})" if c.where is not None else ""
        return f"exists {_q(c.type)}{where}"
    if isinstance(c, Not):
        if isinstance(c.arg, TrueCond):
            return "false"
        return f"not {format_condition(c.arg, 3)}"
    if isinstance(c, And):
        s = " and ".join(format_condition(a, 2) for a in c.args)
        return f"({s})" if prec > 2 else s
    if isinstance(c, Or):
        s = " or ".join(format_condition(a, 1) for a in c.args)
        return f"({s})" if prec > 1 else s
    raise TypeError(c)


def format_event_ref(e) -> str:
    if e.kind == "internal":
        return f"{e.sign}{_q(e.name)}"
    if e.kind == "done":
        return f"done({_q(e.name)})"
    return _q(e.name)


def format_sentry(s) -> str:
    parts = []
    if s.event is not None:
        parts.append(f"on {format_event_ref(s.event)}")
    if s.condition is not None:
        parts.append(f"if {format_condition(s.condition)}")
    return " ".join(parts)


def _format_assign(pairs, target_is_name=False):
    items = []
    for tgt, src in pairs:
        lhs = _q(tgt) if target_is_name else format_term(tgt)
        items.append(f"{lhs} = {format_term(src)}")
    return "{ " + ", ".join(items) + " }" if items else "{ }"


def format_task(task) -> str:
    head = f"task {_q(task.name)} "
    if task.kind == UPDATE:
        body = "update " + _format_assign(task.assign)
    elif task.kind == CREATE:
        body = f"create {_q(task.target_type)} " + _format_assign(task.init, True)
        if task.assign:
            body += " then " + _format_assign(task.assign)
    else:
        body = f"delete {_q(task.target_type)} {format_term(task.victim)}"
        if task.assign:
            body += " then " + _format_assign(task.assign)
    if task.inputs:
        body += " inputs (" + ", ".join(format_term(t) for t in task.inputs) + ")"
    if task.outputs:
        body += " returns (" + ", ".join(_q(o) for o in task.outputs) + ")"
    return head + body


def _format_stage(at, stage, indent):
    pad = "  " * indent
    lines = [f"{pad}stage {_q(stage.name)} {{"]
    for g in stage.guards:
        lines.append(f"{pad}  guard {format_sentry(g)}")
    if stage.task is not None:
        lines.append(f"{pad}  {format_task(at.task(stage.task))}")
    for m in stage.milestones:
        parts = [f"milestone {_q(m.name)}"]
        parts += [f"achieved-by {format_sentry(s)}" for s in m.achieving]
        parts += [f"invalidated-by {format_sentry(s)}" for s in m.invalidating]
        lines.append(f"{pad}  " + " ".join(parts))
    for s in stage.substages:
        lines.extend(_format_stage(at, s, indent + 1))
    lines.append(f"{pad}}}")
    return lines


def _format_type(at, indent, model):
    pad = "  " * indent
    kw = "nested" if indent else "artifact"
    lines = [f"{pad}{kw} {_q(at.name)} {{"]
    for a in at.attributes:
        if a.name == PARENT and at.parent is not None:
            continue
        ref = f" : ref {_q(a.ref_type)}" if a.sort == REF else ""
        lines.append(f"{pad}  attribute {_q(a.name)}{ref}")
    for child in model.child_types(at.name):
        lines.extend(_format_type(child, indent + 1, model))
    for s in at.stages:
        lines.extend(_format_stage(at, s, indent + 1))
    lines.append(f"{pad}}}")
    return lines


def format_model(model: GsmModel) -> str:
    """Pretty-print a model; ``parse_model(format_model(m)) == m``."""
    lines = [f"model {_q(model.name)}", ""]
    for e in model.event_types:
        payload = f" ({', '.join(_q(p) for p in e.payload)})" if e.payload else ""
        lines.append(f"event {_q(e.name)} -> {_q(e.target)}{payload}")
    if model.event_types:
        lines.append("")
    for at in model.artifact_types:
        if at.parent is None:
            lines.extend(_format_type(at, 0, model))
            lines.append("")
    for inst in model.initial_snapshot.instances:
        parent = inst.get(PARENT)
        vals = [(k, v) for k, v in inst.values if k != PARENT and v is not None]
        body = ", ".join(f"{_q(k)} = '{v}'" for k, v in vals)
        par = f" parent {parent}" if parent is not None else ""
        lines.append(f"instance {_q(inst.type)} {inst.id}{par} {{ {body} }}" if body
                     else f"instance {_q(inst.type)} {inst.id}{par} {{ }}")
    return "\n".join(lines).rstrip() + "\n"


# --------------------------------------------------------------------------
# JSON mirror


def _sentry_to_json(s):
    out = {}
    if s.event is not None:
        out["on"] = format_event_ref(s.event)
    if s.condition is not None:
        out["if"] = format_condition(s.condition)
    return out


def _task_to_json(t):
    out = {"name": t.name, "kind": t.kind}
    if t.target_type is not None:
        out["target"] = t.target_type
    if t.init:
        out["init"] = {k: format_term(v) for k, v in t.init}
    if t.assign:
        out["assign"] = [[format_term(a), format_term(b)] for a, b in t.assign]
    if t.victim is not None:
        out["victim"] = format_term(t.victim)
    if t.inputs:
        out["inputs"] = [format_term(x) for x in t.inputs]
    if t.outputs:
        out["returns"] = list(t.outputs)
    return out


def _stage_to_json(at, s):
    return {
        "name": s.name,
        "guards": [_sentry_to_json(g) for g in s.guards],
        "milestones": [
            {"name": m.name,
             "achieved_by": [_sentry_to_json(x) for x in m.achieving],
             "invalidated_by": [_sentry_to_json(x) for x in m.invalidating]}
            for m in s.milestones
        ],
        "substages": [_stage_to_json(at, c) for c in s.substages],
        "task": _task_to_json(at.task(s.task)) if s.task else None,
    }


def model_to_json(model: GsmModel) -> dict:
    return {
        "model": model.name,
        "events": [{"name": e.name, "target": e.target, "payload": list(e.payload)}
                   for e in model.event_types],
        "artifacts": [
            {"name": at.name, "parent": at.parent,
             "attributes": [{"name": a.name, "sort": a.sort, "ref_type": a.ref_type}
                            for a in at.attributes if not (a.name == PARENT and at.parent)],
             "stages": [_stage_to_json(at, s) for s in at.stages]}
            for at in model.artifact_types
        ],
        "instances": [
            {"type": i.type, "id": i.id, "parent": i.get(PARENT),
             "values": {k: v for k, v in i.values if k != PARENT and v is not None}}
            for i in model.initial_snapshot.instances
        ],
    }


def _sentry_from_json(d):
    text = []
    if "on" in d:
        text.append("on " + d["on"])
    if "if" in d:
        text.append("if " + d["if"])
    return _parse_sentry_text(" ".join(text))


def _task_from_json(d):
    assign = tuple((parse_term(a), parse_term(b)) for a, b in d.get("assign", []))
    return Task(
        d["name"], d["kind"], d.get("target"), tuple(d.get("returns", ())),
        tuple(parse_term(x) for x in d.get("inputs", ())),
        tuple((k, parse_term(v)) for k, v in d.get("init", {}).items()),
        assign,
        parse_term(d["victim"]) if d.get("victim") else None,
    )


def _stage_from_json(d):
    return {
        "name": d["name"],
        "within": d.get("within"),
        "guards": [_sentry_from_json(g) for g in d.get("guards", [])],
        "milestones": [
            Milestone(m["name"],
                      tuple(_sentry_from_json(x) for x in m.get("achieved_by", [])),
                      tuple(_sentry_from_json(x) for x in m.get("invalidated_by", [])))
            for m in d.get("milestones", [])
        ],
        "substages": [_stage_from_json(s) for s in d.get("substages", [])],
        "task": _task_from_json(d["task"]) if d.get("task") else None,
    }


def model_from_json(data: dict) -> GsmModel:
    try:
        spec = {
            "model": data.get("model", "model"),
            "events": [EventType(e["name"], e["target"], tuple(e.get("payload", ())))
                       for e in data.get("events", [])],
            "artifacts": [],
            "instances": [dict(i, values=i.get("values", {})) for i in data.get("instances", [])],
        }
        for a in data.get("artifacts", []):
            attrs = [AttributeDecl(x["name"], x.get("sort", SCALAR), x.get("ref_type"))
                     for x in a.get("attributes", [])]
            if a.get("parent"):
                attrs.insert(0, AttributeDecl(PARENT, REF, a["parent"]))
            spec["artifacts"].append({
                "name": a["name"], "parent": a.get("parent"), "attributes": attrs,
                "stages": [_stage_from_json(s) for s in a.get("stages", [])],
            })
    except (KeyError, TypeError, AttributeError) as exc:
        raise ParseError(f"malformed JSON model: {exc!r}") from exc
    return build_model(spec)


def load_model(path) -> GsmModel:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.name.endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
        return model_from_json(data)
    return parse_model(text)


# --------------------------------------------------------------------------
# event scripts

_SCRIPT_LINE = re.compile(
    r"^(?P<type>\"[^\"]*\"|\S+)\s+target=(?P<target>\S+)\s*(?:\{(?P<body>[^}]*)\})?\s*(?:new=(?P<new>\S+))?\s*$"
)


def _script_value(text):
    text = text.strip()
    if text == "null":
        return None
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "'\"":
        return text[1:-1]
    return text


def parse_event_script(text: str) -> list:
    """One event per line: ``TYPE target=ID {attr=value,...} [new=ID]``."""
    events = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SCRIPT_LINE.match(line)
        if m is None:
            raise ParseError(f"malformed event line: {raw!r}", n, 1)
        payload = []
        body = (m.group("body") or "").strip()
        if body:
            for item in body.split(","):
                if "=" not in item:
                    raise ParseError(f"malformed payload item {item.strip()!r}", n, 1)
                k, v = item.split("=", 1)
                payload.append((k.strip(), _script_value(v)))
        etype = m.group("type").strip('"')
        events.append(EventInstance(etype, m.group("target"), tuple(payload), m.group("new")))
    return events


def format_event_script(events) -> str:
    lines = []
    for e in events:
        name = f'"{e.type}"' if " " in e.type else e.type
        body = ",".join(f"{k}={'null' if v is None else v}" for k, v in e.payload)
        new = f" new={e.new_id}" if e.new_id is not None else ""
        lines.append(f"{name} target={e.target} {{{body}}}{new}")
    return "\n".join(lines) + ("\n" if lines else "")
