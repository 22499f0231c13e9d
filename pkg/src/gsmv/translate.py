"""Compilation of a GSM model (through its PAC rules) into a DCDS.

Relations:

``att:T``        one row per instance: id, fr, attributes, stage flags, milestone flags
``block``        (id, blocked) - an instance is blocked while a B-step runs
``exec``         (id, x1..xc) - one eligibility flag per PAC rule, in firing order
``chg:T:X``      (id, value) - status changes made in the running B-step
``msg:E``        incoming one-way event with its payload
``srv:X``        incoming return of task X with its payload
``out:X``        outgoing service call of task X with its inputs

CA rules: ``recv`` / ``ret`` incorporate an event, block the instance and set
the eligibility flags from the prerequisites; ``fire`` applies a PAC rule
whose antecedent holds; ``skip`` marks a rule whose antecedent fails as
processed; ``fin`` releases the instance and flushes the B-step tables.
Every action copies the facts it does not rewrite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .dcds import (
    Action,
    CARule,
    Call,
    DbInstance,
    DcdsError,
    DcdsSpec,
    EffectSpec,
    QAtom,
    QEq,
    QExists,
    QLess,
    QNot,
    QTrue,
    Relation,
    Val,
    Var,
    conj,
    disj,
    neq,
)
from .model import (
    CREATE,
    DELETE,
    PARENT,
    And,
    Attr,
    ChildExists,
    Cmp,
    Const,
    InstanceState,
    IsNull,
    New,
    Not,
    Or,
    Param,
    Snapshot,
    StatusAtom,
    TrueCond,
)

BLOCK = "block"
EXEC = "exec"


class TranslationError(Exception):
    pass


@dataclass(frozen=True)
class ContainerConfig:
    bounds: tuple  # (type name, N) pairs

    def __post_init__(self):
        for t, n in self.bounds:
            if n < 1:
                raise ValueError(f"container bound for {t!r} must be >= 1")

    @classmethod
    def of(cls, d) -> Optional["ContainerConfig"]:
        if d is None or isinstance(d, ContainerConfig):
            return d
        return cls(tuple(sorted(d.items())))

    def as_dict(self) -> dict:
        return dict(self.bounds)

    @property
    def n_max(self) -> int:
        return sum(n for _, n in self.bounds)


@dataclass(frozen=True)
class TranslationMap:
    program: object  # engine.Program
    containers: Optional[ContainerConfig]
    layouts: tuple  # (type, fields)
    order: tuple  # PAC rule ids in firing order
    rule_to_ca: tuple  # (PAC rule id, fire CA rule name)
    skip_rules: tuple  # (PAC rule id, skip CA rule name)
    chg: tuple  # ((type, status name), relation)
    msg: tuple  # (event, relation)
    srv: tuple  # (task, relation)
    out: tuple  # (task, relation)
    event_rules: tuple  # (CA rule name, event or task name)

    def layout(self, t) -> tuple:
        return dict(self.layouts)[t]

    @property
    def aux(self) -> frozenset:
        return frozenset([BLOCK, EXEC] + [r for _, r in self.chg + self.msg + self.srv + self.out])

    @property
    def pools(self) -> frozenset:
        return frozenset(r for _, r in self.chg + self.msg + self.srv + self.out)

    def ca_rule(self, rid) -> str:
        return dict(self.rule_to_ca)[rid]


def att_rel(t) -> str:
    return f"att:{t}"


def layout_of(at) -> tuple:
    return ("id", "fr") + at.attribute_names() + at.stage_names() + at.milestone_names()


class _Vars:
    def __init__(self):
        self.n = 0

    def fresh(self, base="v") -> Var:
        self.n += 1
        return Var(f"_{base}{self.n}")


class _Builder:
    def __init__(self, program, containers: Optional[ContainerConfig]):
        self.program = program
        self.model = program.model
        self.containers = containers
        self.cbounds = containers.as_dict() if containers else {}
        self.order = program.order.order
        self.rules = program.by_id
        self.layouts = {at.name: layout_of(at) for at in self.model.artifact_types}
        self.vars = _Vars()
        self.actions, self.ca_rules, self.services = [], [], {}
        self.rule_to_ca, self.skip_rules, self.event_rules = [], [], []
        self.chg, self.msg, self.srv, self.out = {}, {}, {}, {}
        for at in self.model.artifact_types:
            for n in at.stage_names() + at.milestone_names():
                self.chg[(at.name, n)] = f"chg:{at.name}:{n}"
            for task in at.tasks:
                self.srv[task.name] = f"srv:{task.name}"
                self.out[task.name] = f"out:{task.name}"
        for e in self.model.event_types:
            self.msg[e.name] = f"msg:{e.name}"

    # -- schema ---------------------------------------------------------

    def schema(self) -> tuple:
        rels = [Relation(att_rel(t), len(f), (0,)) for t, f in self.layouts.items()]
        rels.append(Relation(BLOCK, 2, (0,)))
        rels.append(Relation(EXEC, len(self.order) + 1, (0,)))
        for rel in self.chg.values():
            rels.append(Relation(rel, 2, (0,)))
        for e in self.model.event_types:
            rels.append(Relation(self.msg[e.name], 1 + len(e.payload), (0,)))
        for at in self.model.artifact_types:
            for task in at.tasks:
                rels.append(Relation(self.srv[task.name], 1 + len(task.outputs), (0,)))
                rels.append(Relation(self.out[task.name], 1 + len(task.inputs), (0,)))
        return tuple(rels)

    def arity(self, rel) -> int:
        for r in self.schema_cache:
            if r.name == rel:
                return r.arity
        raise KeyError(rel)

    # -- rows and copies --------------------------------------------------

    def row(self, t, prefix) -> dict:
        return {f: Var(f"{prefix}.{f}") for f in self.layouts[t]}

    def att(self, t, row) -> QAtom:
        return QAtom(att_rel(t), tuple(row[f] for f in self.layouts[t]))

    def generic(self, rel, prefix="c") -> tuple:
        return tuple(Var(f"_{prefix}{i}") for i in range(self.arity(rel)))

    def copy(self, rel, exclude=()) -> EffectSpec:
        """Copy ``rel`` except rows whose first column equals a term in ``exclude``."""
        vs = self.generic(rel)
        q = conj(QAtom(rel, vs), *(neq(vs[0], x) for x in exclude))
        return EffectSpec(q, ((rel, vs),))

    def copy_all(self, skip=(), exclude=None) -> list:
        """Copy every relation not in ``skip``; ``exclude`` maps relation -> ids."""
        exclude = exclude or {}
        return [self.copy(r.name, exclude.get(r.name, ())) for r in self.schema_cache
                if r.name not in skip]

    def service(self, fn, args) -> Call:
        self.services[fn] = len(args)
        return Call(fn, tuple(args))

    # -- conditions -------------------------------------------------------

    def deref(self, ref_term, child_type, name) -> tuple:
        """``(query binding v, v)``: v is ``name`` of the live child ``ref_term``, else null."""
        v = self.vars.fresh("d")
        row = self.row(child_type, self.vars.fresh("r").name)
        row["id"], row["fr"], row[name] = ref_term, Val(False), v
        hidden = tuple(x.name for f, x in row.items() if isinstance(x, Var) and x != v and f not in ("id",))
        row2 = self.row(child_type, self.vars.fresh("r").name)
        row2["id"], row2["fr"] = ref_term, Val(False)
        hidden2 = tuple(x.name for f, x in row2.items() if isinstance(x, Var) and f != "id")
        q = disj(QExists(hidden, self.att(child_type, row)),
                 conj(QNot(QExists(hidden2, self.att(child_type, row2))), QEq(v, Val(None))))
        return q, v

    def term(self, t, owner, row, it=None) -> tuple:
        """``(binding query, query term)`` for a model term read from ``row``."""
        if isinstance(t, Const):
            return QTrue(), Val(t.value)
        if isinstance(t, Attr):
            if t.ref is None:
                return QTrue(), row[t.name]
            if t.ref == "it":
                return QTrue(), it[1][t.name]
            ref_type = self.model.type(owner).attribute(t.ref).ref_type
            return self.deref(row[t.ref], ref_type, t.name)
        raise TranslationError(f"term {t!r} not allowed here")

    def cond(self, c, owner, row, it=None):
        if isinstance(c, TrueCond):
            return QTrue()
        if isinstance(c, (Cmp, IsNull)):
            pairs = [self.term(x, owner, row, it) for x in ((c.left, c.right) if isinstance(c, Cmp) else (c.term,))]
            binds = [q for q, _ in pairs]
            hidden = tuple(v.name for q, v in pairs if not isinstance(q, QTrue))
            if isinstance(c, Cmp):
                test = QEq(pairs[0][1], pairs[1][1])
                test = test if c.op == "=" else QNot(test)
            else:
                test = QEq(pairs[0][1], Val(None))
                test = QNot(test) if c.negated else test
            body = conj(*binds, test)
            return QExists(hidden, body) if hidden else body
        if isinstance(c, StatusAtom):
            return QEq(row[c.name], Val(True))
        if isinstance(c, ChildExists):
            crow = self.row(c.type, self.vars.fresh("k").name)
            crow["fr"], crow[PARENT] = Val(False), row["id"]
            body = conj(self.att(c.type, crow),
                        self.cond(c.where, owner, row, (c.type, crow)) if c.where is not None else QTrue())
            return QExists(tuple(v.name for v in crow.values() if isinstance(v, Var) and v != row["id"]), body)
        if isinstance(c, Not):
            return QNot(self.cond(c.arg, owner, row, it))
        if isinstance(c, And):
            return conj(*(self.cond(a, owner, row, it) for a in c.args))
        if isinstance(c, Or):
            return disj(*(self.cond(a, owner, row, it) for a in c.args))
        raise TypeError(c)

    def sentry(self, s, owner, row):
        ident = row["id"]
        parts = []
        ev = s.event
        if ev is not None:
            if ev.kind == "internal":
                parts.append(QAtom(self.chg[(owner, ev.name)], (ident, Val(ev.sign == "+"))))
            else:
                rel = self.msg[ev.name] if ev.kind == "external" else self.srv[ev.name]
                vs = self.generic(rel, self.vars.fresh("p").name)
                parts.append(QExists(tuple(v.name for v in vs[1:]), QAtom(rel, (ident,) + vs[1:])))
        if s.condition is not None:
            parts.append(self.cond(s.condition, owner, row))
        return conj(*parts)

    def antecedent(self, rule, row):
        ident = row["id"]
        parts = [QEq(row[n], Val(v)) for n, v in rule.status]
        if rule.untoggled is not None:
            u = self.vars.fresh("u")
            parts.append(QNot(QExists((u.name,), QAtom(self.chg[(rule.owner, rule.untoggled)], (ident, u)))))
        if rule.events_any:
            parts.append(disj(*(QAtom(self.chg[(rule.owner, n)], (ident, Val(sign == "+")))
                                for sign, n in rule.events_any)))
        if rule.sentries:
            parts.append(disj(*(self.sentry(s, rule.owner, row) for s in rule.sentries)))
        return conj(*parts)

    # -- eligibility setup ------------------------------------------------

    def setup(self, owner, row) -> tuple:
        """``(query, exec terms)`` computing the flags from the prerequisites."""
        qs, terms = [], []
        for rid in self.order:
            r = self.rules[rid]
            if r.owner != owner:
                terms.append(Val(True))
                continue
            if len(r.prerequisite) != 1:
                raise TranslationError(f"rule {rid}: prerequisite must be a single status literal")
            (n, v), = r.prerequisite
            x = Var(f"x.{rid}")
            qs.append(disj(conj(QEq(row[n], Val(v)), QEq(x, Val(False))),
                           conj(QNot(QEq(row[n], Val(v))), QEq(x, Val(True)))))
            terms.append(x)
        return conj(*qs), tuple(terms)

    @staticmethod
    def params_of(*term_groups) -> tuple:
        seen = []
        for group in term_groups:
            for t in group:
                if isinstance(t, Var) and t.name not in seen:
                    seen.append(t.name)
        return tuple(seen)

    def add(self, name, query, params, effects, label):
        self.actions.append(Action(name, params, tuple(effects), label))
        self.ca_rules.append(CARule(name, query, name, params))

    def no_blocked(self):
        b = self.vars.fresh("b")
        return QNot(QExists((b.name,), QAtom(BLOCK, (b, Val(True)))))

    # -- event incorporation ------------------------------------------------

    def recv(self, e):
        at = self.model.type(e.target)
        row = self.row(at.name, "s")
        row["fr"] = Val(False)
        ident = row["id"]
        setup_q, xs = self.setup(at.name, row)
        q = conj(self.att(at.name, row), QAtom(BLOCK, (ident, Val(False))), self.no_blocked(), setup_q)
        new = dict(row)
        calls = []
        for p in e.payload:
            new[p] = self.service(f"in:{e.name}:{p}", (ident,))
            calls.append(new[p])
        params = self.params_of(row.values(), xs)
        effects = [
            EffectSpec(QTrue(), ((att_rel(at.name), tuple(new[f] for f in self.layouts[at.name])),)),
            EffectSpec(QTrue(), ((self.msg[e.name], (ident,) + tuple(calls)),)),
            EffectSpec(QTrue(), ((BLOCK, (ident, Val(True))),)),
            EffectSpec(QTrue(), ((EXEC, (ident,) + xs),)),
        ]
        effects += self.copy_all(exclude={att_rel(at.name): (ident,), BLOCK: (ident,), EXEC: (ident,)})
        name = f"recv:{e.name}"
        self.add(name, q, params, effects, e.name)
        self.event_rules.append((name, e.name))

    def ret(self, at, task):
        stage = at.stage_of_task(task.name)
        row = self.row(at.name, "s")
        row["fr"] = Val(False)
        ident = row["id"]
        extra_q = []
        setup_q, xs = self.setup(at.name, row)
        param_terms = list(row.values()) + list(xs)

        def src(t):
            if isinstance(t, Param):
                return self.service(f"ret:{task.name}:{t.name}", (ident,))
            if isinstance(t, New):
                return new_id
            bq, v = self.term(t, at.name, row)
            if not isinstance(bq, QTrue):
                extra_q.append(bq)
                param_terms.append(v)
            return v

        rewritten = {att_rel(at.name): [ident], BLOCK: [ident], EXEC: [ident]}
        effects = []
        new_id = None
        victim = None
        target = task.target_type
        if task.kind == CREATE:
            bound = self.cbounds.get(target)
            if bound is not None:
                c = Var("c.id")
                crow = self.row(target, "c")
                crow["fr"] = Val(True)
                other = self.row(target, "o")
                other["fr"] = Val(True)
                hidden = tuple(v.name for v in other.values() if isinstance(v, Var))
                extra_q.append(self.att(target, crow))
                extra_q.append(QNot(QExists(hidden, conj(self.att(target, other), QLess(other["id"], c)))))
                param_terms.append(c)
                new_id = c
                rewritten.setdefault(att_rel(target), []).append(c)
            else:
                new_id = self.service(f"new:{target}", (ident,))
                blank = tuple(Val(True) for _ in self.order)
                effects.append(EffectSpec(QTrue(), ((BLOCK, (new_id, Val(False))), (EXEC, (new_id,) + blank))))
        if task.kind == DELETE:
            bq, victim = self.term(task.victim, at.name, row)
            if isinstance(bq, QTrue):
                victim_var = Var("vic")
                extra_q.append(QEq(victim_var, victim))
                victim = victim_var
            else:
                extra_q.append(bq)
            vrow = self.row(target, "w")
            vrow["id"], vrow["fr"] = victim, Val(False)
            extra_q.append(QExists(tuple(v.name for f, v in vrow.items() if f != "id" and isinstance(v, Var)),
                                   self.att(target, vrow)))
            param_terms.append(victim)
            rewritten.setdefault(att_rel(target), []).append(victim)
            if target not in self.cbounds:
                rewritten[BLOCK].append(victim)
                rewritten[EXEC].append(victim)

        # owner row: own assignments, then null every reference to the victim
        new = dict(row)
        own = {tgt.name: src(s) for tgt, s in task.assign if tgt.ref is None}
        through = [(tgt, src(s)) for tgt, s in task.assign if tgt.ref is not None]
        for a in at.attribute_names():
            if a in own:
                new[a] = own[a]
            elif victim is not None and a != PARENT:
                nv = Var(f"n.{a}")
                extra_q.append(disj(conj(QEq(row[a], victim), QEq(nv, Val(None))),
                                    conj(neq(row[a], victim), QEq(nv, row[a]))))
                param_terms.append(nv)
                new[a] = nv
        effects.append(EffectSpec(QTrue(), ((att_rel(at.name), tuple(new[f] for f in self.layouts[at.name])),)))

        outs = tuple(self.service(f"ret:{task.name}:{o}", (ident,)) for o in task.outputs)
        effects.append(EffectSpec(QTrue(), ((self.srv[task.name], (ident,) + outs),)))
        effects.append(EffectSpec(QTrue(), ((BLOCK, (ident, Val(True))), (EXEC, (ident,) + xs))))

        if task.kind == CREATE:
            vals = {k: src(s) for k, s in task.init}
            crow = {f: Val(None) for f in self.layouts[target]}
            crow.update(vals)
            crow["id"], crow["fr"], crow[PARENT] = new_id, Val(False), ident
            effects.append(EffectSpec(QTrue(), ((att_rel(target), tuple(crow[f] for f in self.layouts[target])),)))
        if task.kind == DELETE and target in self.cbounds:
            blank = {f: Val(False) if f not in self.model.type(target).attribute_names() else Val(None)
                     for f in self.layouts[target]}
            blank["id"], blank["fr"] = victim, Val(True)
            effects.append(EffectSpec(QTrue(), ((att_rel(target), tuple(blank[f] for f in self.layouts[target])),)))
        if through:
            ref = through[0][0].ref
            ref_type = at.attribute(ref).ref_type
            r = row[ref]
            trow = self.row(ref_type, "t")
            trow["id"] = r
            upd = dict(trow)
            for tgt, v in through:
                upd[tgt.name] = v
            guard = [self.att(ref_type, trow)]
            if victim is not None:
                guard.append(neq(r, victim))
            if new_id is not None and isinstance(new_id, Var):
                guard.append(neq(r, new_id))
            effects.append(EffectSpec(conj(*guard), ((att_rel(ref_type), tuple(upd[f] for f in self.layouts[ref_type])),)))
            rewritten.setdefault(att_rel(ref_type), []).append(r)
        effects += self.copy_all(exclude={k: tuple(v) for k, v in rewritten.items()})
        q = conj(self.att(at.name, row), QEq(row[stage.name], Val(True)), QAtom(BLOCK, (ident, Val(False))),
                 self.no_blocked(), setup_q, *extra_q)
        name = f"ret:{task.name}"
        self.add(name, q, self.params_of(param_terms), effects, task.name)
        self.event_rules.append((name, task.name))

    # -- micro-steps ----------------------------------------------------------

    def exec_atom(self, ident, pos) -> tuple:
        xs = []
        for i, rid in enumerate(self.order):
            if i < pos:
                xs.append(Val(True))
            elif i == pos:
                xs.append(Val(False))
            else:
                xs.append(Var(f"x.{rid}"))
        return QAtom(EXEC, (ident,) + tuple(xs)), tuple(xs)

    def micro(self, pos, rid):
        rule = self.rules[rid]
        t = rule.owner
        at = self.model.type(t)
        row = self.row(t, "s")
        row["fr"] = Val(False)
        ident = row["id"]
        ex, xs = self.exec_atom(ident, pos)
        done = tuple(Val(True) if i == pos else x for i, x in enumerate(xs))
        base = [QAtom(BLOCK, (ident, Val(True))), ex, self.att(t, row)]
        ante = self.antecedent(rule, row)

        # fire
        extra_q, params = [], list(row.values()) + list(xs)
        effects = [EffectSpec(QTrue(), ((EXEC, (ident,) + done),))]
        rewritten = {EXEC: (ident,)}
        if rule.dispatch:
            task = at.task(rule.target)
            inputs = []
            for term in task.inputs:
                bq, v = self.term(term, t, row)
                if not isinstance(bq, QTrue):
                    extra_q.append(bq)
                    params.append(v)
                inputs.append(v)
            effects.append(EffectSpec(QTrue(), ((self.out[task.name], (ident,) + tuple(inputs)),)))
        else:
            new = dict(row)
            new[rule.target] = Val(rule.value)
            effects.append(EffectSpec(QTrue(), ((att_rel(t), tuple(new[f] for f in self.layouts[t])),)))
            effects.append(EffectSpec(QTrue(), ((self.chg[(t, rule.target)], (ident, Val(rule.value))),)))
            rewritten[att_rel(t)] = (ident,)
        effects += self.copy_all(exclude=rewritten)
        name = f"fire:{rid}"
        self.add(name, conj(*base, ante, *extra_q), self.params_of(params), effects, rid)
        self.rule_to_ca.append((rid, name))

        # skip
        effects = [EffectSpec(QTrue(), ((EXEC, (ident,) + done),))] + self.copy_all(exclude={EXEC: (ident,)})
        name = f"skip:{rid}"
        self.add(name, conj(*base, QNot(ante)), self.params_of((ident,), xs, row.values()), effects, rid)
        self.skip_rules.append((rid, name))

    def fin(self):
        ident = Var("id")
        all_done = tuple(Val(True) for _ in self.order)
        q = conj(QAtom(BLOCK, (ident, Val(True))), QAtom(EXEC, (ident,) + all_done))
        effects = [EffectSpec(QTrue(), ((BLOCK, (ident, Val(False))),))]
        pools = set(self.chg.values()) | set(self.msg.values()) | set(self.srv.values()) | set(self.out.values())
        effects += self.copy_all(exclude={BLOCK: (ident,), **{p: (ident,) for p in pools}})
        self.add("fin", q, ("id",), effects, "fin")

    # -- initial database -----------------------------------------------------

    def initial(self) -> DbInstance:
        facts = set()
        done = tuple(True for _ in self.order)
        snap = self.model.initial_snapshot
        for inst in snap.instances:
            facts.add((att_rel(inst.type), self.encode(inst, False)))
            facts.add((BLOCK, (inst.id, False)))
            facts.add((EXEC, (inst.id,) + done))
        for t, n in sorted(self.cbounds.items()):
            have = len(snap.of_type(t))
            if have > n:
                raise TranslationError(f"initial snapshot has {have} instances of {t!r}, bound is {n}")
            at = self.model.type(t)
            k = 0
            for _ in range(n - have):
                k += 1
                while f"{t}@{k}" in snap:
                    k += 1
                cid = f"{t}@{k}"
                facts.add((att_rel(t), self.encode(InstanceState(cid, t, tuple((a, None) for a in at.attribute_names())), True)))
                facts.add((BLOCK, (cid, False)))
                facts.add((EXEC, (cid,) + done))
        return DbInstance(frozenset(facts))

    def encode(self, inst: InstanceState, fr: bool) -> tuple:
        at = self.model.type(inst.type)
        return ((inst.id, fr) + tuple(inst.get(a) for a in at.attribute_names())
                + tuple(s in inst.open for s in at.stage_names())
                + tuple(m in inst.achieved for m in at.milestone_names()))

    # -- everything -----------------------------------------------------------

    def build(self):
        self.schema_cache = self.schema()
        for e in self.model.event_types:
            self.recv(e)
        for at in self.model.artifact_types:
            for task in at.tasks:
                self.ret(at, task)
        for pos, rid in enumerate(self.order):
            self.micro(pos, rid)
        self.fin()
        spec = DcdsSpec(self.schema_cache, tuple(sorted(self.services.items())), tuple(self.actions),
                        tuple(self.ca_rules), self.initial())
        spec.check()
        tmap = TranslationMap(
            self.program, self.containers, tuple(self.layouts.items()), self.order,
            tuple(self.rule_to_ca), tuple(self.skip_rules), tuple(self.chg.items()),
            tuple(self.msg.items()), tuple(self.srv.items()), tuple(self.out.items()),
            tuple(self.event_rules))
        return spec, tmap


def translate(program, containers=None):
    """Compile ``program`` into ``(DcdsSpec, TranslationMap)``."""
    return _Builder(program, ContainerConfig.of(containers)).build()


def apply_container_semantics(spec, tmap: TranslationMap, containers):
    """Rebuild the translation over pre-allocated instance containers.

    Create returns then claim the least free container of the target type
    and are disabled while none is free; deletes blank the container.
    """
    cfg = ContainerConfig.of(containers)
    if cfg is None:
        raise ValueError("container bounds required")
    return translate(tmap.program, cfg)


# --------------------------------------------------------------------------
# reading databases back


def is_unblocked(db: DbInstance) -> bool:
    return all(tup[1] is False for tup in db.rel(BLOCK))


def filter_state(tmap: TranslationMap, db: DbInstance) -> Snapshot:
    """Project away auxiliary relations and blank containers."""
    if not is_unblocked(db):
        raise DcdsError("filter_state is defined only on unblocked states")
    model = tmap.program.model
    insts = []
    for at in model.artifact_types:
        attrs, stages, ms = at.attribute_names(), at.stage_names(), at.milestone_names()
        for tup in db.rel(att_rel(at.name)):
            if tup[1] is True:
                continue
            vals = tup[2:2 + len(attrs)]
            sflags = tup[2 + len(attrs):2 + len(attrs) + len(stages)]
            mflags = tup[2 + len(attrs) + len(stages):]
            insts.append(InstanceState(
                tup[0], at.name, tuple(zip(attrs, vals)),
                frozenset(s for s, f in zip(stages, sflags) if f),
                frozenset(m for m, f in zip(ms, mflags) if f)))
    return Snapshot(tuple(insts))


def instance_count(tmap: TranslationMap, db: DbInstance) -> int:
    """Artifact instances including blank containers."""
    return sum(len(db.rel(att_rel(t))) for t, _ in tmap.layouts)


def aux_bound_violations(tmap: TranslationMap, db: DbInstance) -> list:
    """Check the cardinality bounds on the auxiliary relations."""
    out = []
    n = instance_count(tmap, db)
    if len(db.rel(BLOCK)) != n:
        out.append(f"|block| = {len(db.rel(BLOCK))} != {n} instances")
    if len(db.rel(EXEC)) != n:
        out.append(f"|exec| = {len(db.rel(EXEC))} != {n} instances")
    model = tmap.program.model
    atomic = {at.name: sum(1 for s in at.all_stages if s.atomic) for at in model.artifact_types}
    owner = {tup[0]: t for t, _ in tmap.layouts for tup in db.rel(att_rel(t))}
    for kind, pools in (("msg", tmap.msg), ("srv", tmap.srv)):
        per = {}
        for _, rel in pools:
            for tup in db.rel(rel):
                per[tup[0]] = per.get(tup[0], 0) + 1
        for i, k in per.items():
            if k > 1:
                out.append(f"{kind} pool holds {k} facts for {i}")
    per = {}
    for _, rel in tmap.out:
        for tup in db.rel(rel):
            per[tup[0]] = per.get(tup[0], 0) + 1
    for i, k in per.items():
        if k > atomic.get(owner.get(i), 0):
            out.append(f"out pool holds {k} facts for {i}")
    if is_unblocked(db):
        for rel in tmap.pools:
            if db.rel(rel):
                out.append(f"pool {rel} not empty in an unblocked state")
    return out


def mapping_report(spec: DcdsSpec, tmap: TranslationMap) -> str:
    lines = [f"relations: {len(spec.schema)}  actions: {len(spec.actions)}  CA rules: {len(spec.ca_rules)}",
             f"exec arity: {len(tmap.order) + 1}",
             "auxiliary: " + ", ".join(sorted(tmap.aux)), "", "PAC rule -> CA rules"]
    skip = dict(tmap.skip_rules)
    for rid, name in tmap.rule_to_ca:
        lines.append(f"  {rid} -> {name} (skip: {skip[rid]})")
    lines.append("events -> CA rules")
    for name, ev in tmap.event_rules:
        lines.append(f"  {ev} -> {name}")
    if tmap.containers:
        lines.append("containers: " + ", ".join(f"{t}={n}" for t, n in tmap.containers.bounds)
                     + f" (N_max = {tmap.containers.n_max})")
    return "\n".join(lines) + "\n"
