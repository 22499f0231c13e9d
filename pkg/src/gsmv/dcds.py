"""Data-Centric Dynamic Systems: a relational data layer plus a process layer.

States are finite sets of facts.  Condition-action rules pair a query with
an action; every answer of the query enables the action with those
parameter values.  An action is a set of effects ``Q ~> E``: each answer
of ``Q`` (with the parameters substituted) asserts the facts in ``E``.
The successor contains only asserted facts, so copying must be explicit.
Facts may contain service-call terms, resolved by an oracle that offers
every admissible assignment (nondeterministic services).

Queries are first-order over equality, with negation, disjunction and
existential quantification; two evaluators are provided, a join-based one
and a naive active-domain one used as its oracle.
"""

from __future__ import annotations


import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union


class DcdsError(Exception):
    pass


class UnsafeQuery(DcdsError):
    pass


def value_key(v):
    """Total order over values: None < booleans < strings."""
    if v is None:
        return (0, "")
    if isinstance(v, bool):
        return (1, str(v))
    return (2, str(v))


# --------------------------------------------------------------------------
# terms and queries


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Val:
    value: object


@dataclass(frozen=True)
class Call:
    """Service-call term ``fn(args)``; only allowed in effect heads."""

    fn: str
    args: tuple = ()


QTerm = Union[Var, Val]


@dataclass(frozen=True)
class QTrue:
    pass


@dataclass(frozen=True)
class QAtom:
    rel: str
    terms: tuple


@dataclass(frozen=True)
class QEq:
    left: QTerm
    right: QTerm


@dataclass(frozen=True)
class QLess:
    """``left`` precedes ``right`` in :func:`value_key` order."""

    left: QTerm
    right: QTerm


@dataclass(frozen=True)
class QNot:
    arg: object


@dataclass(frozen=True)
class QAnd:
    args: tuple


@dataclass(frozen=True)
class QOr:
    args: tuple


@dataclass(frozen=True)
class QExists:
    vars: tuple
    body: object


Query = Union[QTrue, QAtom, QEq, QLess, QNot, QAnd, QOr, QExists]


def conj(*qs):
    flat = []
    for q in qs:
        if isinstance(q, QAnd):
            flat.extend(q.args)
        elif not isinstance(q, QTrue):
            flat.append(q)
    if not flat:
        return QTrue()
    return flat[0] if len(flat) == 1 else QAnd(tuple(flat))


def disj(*qs):
    return qs[0] if len(qs) == 1 else QOr(tuple(qs))


def neq(a, b):
    return QNot(QEq(a, b))


_FREE = {}


def free_vars(q) -> frozenset:
    # query trees are immutable and long-lived: cache by identity
    hit = _FREE.get(id(q))
    if hit is not None and hit[0] is q:
        return hit[1]
    fv = _free_vars(q)
    _FREE[id(q)] = (q, fv)
    return fv


def _free_vars(q) -> frozenset:
    if isinstance(q, QAtom):
        return frozenset(t.name for t in q.terms if isinstance(t, Var))
    if isinstance(q, (QEq, QLess)):
        return frozenset(t.name for t in (q.left, q.right) if isinstance(t, Var))
    if isinstance(q, QNot):
        return free_vars(q.arg)
    if isinstance(q, (QAnd, QOr)):
        return frozenset().union(*(free_vars(a) for a in q.args))
    if isinstance(q, QExists):
        return free_vars(q.body) - set(q.vars)
    return frozenset()


def query_constants(q) -> set:
    out = set()
    if isinstance(q, QAtom):
        out |= {t.value for t in q.terms if isinstance(t, Val)}
    elif isinstance(q, (QEq, QLess)):
        out |= {t.value for t in (q.left, q.right) if isinstance(t, Val)}
    elif isinstance(q, QNot):
        out |= query_constants(q.arg)
    elif isinstance(q, (QAnd, QOr)):
        for a in q.args:
            out |= query_constants(a)
    elif isinstance(q, QExists):
        out |= query_constants(q.body)
    return out


# --------------------------------------------------------------------------
# database instances


@dataclass(frozen=True)
class Relation:
    name: str
    arity: int
    key: Optional[tuple] = None  # positions forming a key


@dataclass(frozen=True)
class DbInstance:
    facts: frozenset = frozenset()  # of (relation, tuple)
    _by_rel: dict = field(default=None, compare=False, hash=False, repr=False)
    _by_first: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "facts", frozenset(self.facts))
        by_rel, by_first = {}, {}
        for rel, tup in self.facts:
            by_rel.setdefault(rel, []).append(tup)
            if tup:
                by_first.setdefault((rel, tup[0]), []).append(tup)
        object.__setattr__(self, "_by_rel", by_rel)
        object.__setattr__(self, "_by_first", by_first)

    def rel(self, name) -> list:
        return self._by_rel.get(name, [])

    def rel_first(self, name, first) -> list:
        return self._by_first.get((name, first), [])

    def adom(self) -> frozenset:
        return frozenset(v for _, tup in self.facts for v in tup)

    def size(self) -> int:
        return len(self.facts)

    def sorted_facts(self) -> list:
        return sorted(self.facts, key=lambda f: (f[0], tuple(value_key(v) for v in f[1])))

    def __len__(self):
        return len(self.facts)


def key_violations(schema, db: DbInstance) -> list:
    out = []
    for r in schema:
        if r.key is None:
            continue
        seen = {}
        for tup in db.rel(r.name):
            k = tuple(tup[i] for i in r.key)
            if k in seen and seen[k] != tup:
                out.append(f"key violation in {r.name}: {seen[k]} vs {tup}")
            seen[k] = tup
    return out


# --------------------------------------------------------------------------
# join-based evaluation


def _val(t, env):
    if isinstance(t, Val):
        return True, t.value
    if t.name in env:
        return True, env[t.name]
    return False, None


def _ready(q, env) -> int:
    """Scheduling priority inside a conjunction (lower first, None = not ready)."""
    if isinstance(q, (QNot, QLess)):
        return 0 if env.keys() >= free_vars(q) else None
    if isinstance(q, QEq):
        lb, _ = _val(q.left, env)
        rb, _ = _val(q.right, env)
        if lb and rb:
            return 0
        return 1 if (lb or rb) else None
    if isinstance(q, QTrue):
        return 0
    if isinstance(q, QAtom):
        for t in q.terms:
            if isinstance(t, Val) or t.name in env:
                return 2
        return 3
    return 4


def _eval(q, db: DbInstance, env: dict):
    if isinstance(q, QTrue):
        yield env
    elif isinstance(q, QAtom):
        first_b, first_v = _val(q.terms[0], env) if q.terms else (False, None)
        rows = db.rel_first(q.rel, first_v) if first_b else db.rel(q.rel)
        for tup in rows:
            if len(tup) != len(q.terms):
                continue
            new = env
            ok = True
            for t, v in zip(q.terms, tup):
                b, cur = _val(t, new)
                if b:
                    if cur != v or type(cur) is not type(v):
                        ok = False
                        break
                else:
                    if new is env:
                        new = dict(env)
                    new[t.name] = v
            if ok:
                yield new
    elif isinstance(q, QEq):
        lb, lv = _val(q.left, env)
        rb, rv = _val(q.right, env)
        if lb and rb:
            if _same(lv, rv):
                yield env
        elif lb:
            yield {**env, q.right.name: lv}
        elif rb:
            yield {**env, q.left.name: rv}
        else:
            raise UnsafeQuery(f"equality between two unbound variables: {q}")
    elif isinstance(q, QLess):
        lb, lv = _val(q.left, env)
        rb, rv = _val(q.right, env)
        if not (lb and rb):
            raise UnsafeQuery(f"comparison over unbound variables: {q}")
        if value_key(lv) < value_key(rv):
            yield env
    elif isinstance(q, QNot):
        if not free_vars(q.arg) <= env.keys():
            raise UnsafeQuery(f"negation over unbound variables {sorted(free_vars(q.arg) - env.keys())}")
        for _ in _eval(q.arg, db, env):
            return
        yield env
    elif isinstance(q, QAnd):
        yield from _eval_and(list(q.args), db, env)
    elif isinstance(q, QOr):
        need = free_vars(q)
        for a in q.args:
            for e in _eval(a, db, env):
                if not need <= e.keys():
                    raise UnsafeQuery(f"disjunct leaves {sorted(need - e.keys())} unbound")
                yield e
    elif isinstance(q, QExists):
        inner = {k: v for k, v in env.items() if k not in q.vars}
        keep = free_vars(q)
        for e in _eval(q.body, db, inner):
            out = dict(env)
            for k in keep:
                out[k] = e[k]
            yield out
    else:
        raise TypeError(q)


def _same(a, b):
    return a == b and type(a) is type(b)


def _eval_and(parts, db, env):
    if not parts:
        yield env
        return
    best, best_p = None, None
    for i, p in enumerate(parts):
        r = _ready(p, env)
        if r is not None and (best_p is None or r < best_p):
            best, best_p = i, r
            if r == 0:
                break
    if best is None:
        raise UnsafeQuery("conjunction cannot bind its variables: "
                          + ", ".join(type(p).__name__ for p in parts))
    rest = parts[:best] + parts[best + 1:]
    for e in _eval(parts[best], db, env):
        yield from _eval_and(rest, db, e)


def answers(q, db: DbInstance, env: Optional[dict] = None) -> list:
    """Distinct bindings of the free variables of ``q`` (extending ``env``)."""
    env = dict(env or {})
    need = sorted(free_vars(q) | env.keys())
    seen, out = set(), []
    for e in _eval(q, db, env):
        key = tuple((k, e[k]) for k in need)
        if key not in seen:
            seen.add(key)
            out.append(dict(key))
    return out


def holds(q, db: DbInstance, env: Optional[dict] = None) -> bool:
    for _ in _eval(q, db, dict(env or {})):
        return True
    return False


# --------------------------------------------------------------------------
# naive active-domain evaluation (oracle)


def _naive_holds(q, db, env, dom):
    if isinstance(q, QTrue):
        return True
    if isinstance(q, QAtom):
        tup = tuple(_val(t, env)[1] for t in q.terms)
        return any(_same_tuple(tup, f) for f in db.rel(q.rel))
    if isinstance(q, QEq):
        return _same(_val(q.left, env)[1], _val(q.right, env)[1])
    if isinstance(q, QLess):
        return value_key(_val(q.left, env)[1]) < value_key(_val(q.right, env)[1])
    if isinstance(q, QNot):
        return not _naive_holds(q.arg, db, env, dom)
    if isinstance(q, QAnd):
        return all(_naive_holds(a, db, env, dom) for a in q.args)
    if isinstance(q, QOr):
        return any(_naive_holds(a, db, env, dom) for a in q.args)
    if isinstance(q, QExists):
        for vals in itertools.product(dom, repeat=len(q.vars)):
            if _naive_holds(q.body, db, {**env, **dict(zip(q.vars, vals))}, dom):
                return True
        return False
    raise TypeError(q)


def _same_tuple(a, b):
    return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))


def answers_naive(q, db: DbInstance, env: Optional[dict] = None) -> list:
    """Enumerate every assignment over the active domain plus query constants."""
    env = dict(env or {})
    dom = sorted(db.adom() | query_constants(q) | set(env.values()), key=value_key)
    names = sorted(free_vars(q) - env.keys())
    out = []
    for vals in itertools.product(dom, repeat=len(names)):
        e = {**env, **dict(zip(names, vals))}
        if _naive_holds(q, db, e, dom):
            out.append(dict(sorted(e.items())))
    return out


# --------------------------------------------------------------------------
# process layer


@dataclass(frozen=True)
class EffectSpec:
    query: object
    facts: tuple  # of (relation, terms) with terms Var | Val | Call


@dataclass(frozen=True)
class Action:
    name: str
    params: tuple = ()
    effects: tuple = ()
    label: str = ""  # free-form tag (e.g. the GSM construct it encodes)


@dataclass(frozen=True)
class CARule:
    name: str
    query: object
    action: str
    args: tuple = ()  # query variables passed as the action's parameters


@dataclass(frozen=True)
class DcdsSpec:
    schema: tuple  # of Relation
    services: tuple  # of (name, arity)
    actions: tuple
    ca_rules: tuple
    initial: DbInstance = field(default_factory=DbInstance)

    def relation(self, name) -> Optional[Relation]:
        for r in self.schema:
            if r.name == name:
                return r
        return None

    def action(self, name) -> Action:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    def check(self):
        """Raise :class:`DcdsError` if a structural invariant fails."""
        rels = {r.name: r for r in self.schema}
        services = dict(self.services)
        for a in self.actions:
            for eff in a.effects:
                bound = free_vars(eff.query) | set(a.params)
                for rel, terms in eff.facts:
                    if rel not in rels:
                        raise DcdsError(f"action {a.name}: effect head {rel!r} not in schema")
                    if len(terms) != rels[rel].arity:
                        raise DcdsError(f"action {a.name}: arity mismatch for {rel!r}")
                    for t in _flat_terms(terms):
                        if isinstance(t, Var) and t.name not in bound:
                            raise DcdsError(f"action {a.name}: unbound variable {t.name!r} in effect")
                        if isinstance(t, Call) and services.get(t.fn) != len(t.args):
                            raise DcdsError(f"action {a.name}: undeclared service {t.fn!r}")
        names = {a.name: a for a in self.actions}
        for r in self.ca_rules:
            if r.action not in names:
                raise DcdsError(f"rule {r.name}: unknown action {r.action!r}")
            if len(r.args) != len(names[r.action].params):
                raise DcdsError(f"rule {r.name}: parameter count mismatch")
            missing = set(r.args) - free_vars(r.query)
            if missing:
                raise DcdsError(f"rule {r.name}: parameters {sorted(missing)} not answered by the query")
        return self


def _flat_terms(terms):
    for t in terms:
        yield t
        if isinstance(t, Call):
            yield from _flat_terms(t.args)


@dataclass(frozen=True)
class Enabled:
    rule: str
    action: str
    binding: tuple  # (param, value)


def enabled_actions(spec: DcdsSpec, db: DbInstance) -> list:
    out = []
    for r in spec.ca_rules:
        params = spec.action(r.action).params
        for ans in answers(r.query, db):
            out.append(Enabled(r.name, r.action, tuple((p, ans[a]) for p, a in zip(params, r.args))))
    return out


# service oracles: called with (db, calls) where calls is a tuple of ground
# (fn, args) pairs; return an iterable of dicts call -> value.
Oracle = Callable[[DbInstance, tuple], Iterable[dict]]


def product_oracle(values) -> Oracle:
    """Every assignment of ``values`` to the calls."""
    values = tuple(values)

    def oracle(db, calls):
        for combo in itertools.product(values, repeat=len(calls)):
            yield dict(zip(calls, combo))

    return oracle


def random_oracle(rng, values) -> Oracle:
    """One random assignment per application (simulation)."""
    values = tuple(values)

    def oracle(db, calls):
        yield {c: rng.choice(values) for c in calls}

    return oracle


@dataclass(frozen=True)
class ActionResult:
    successors: tuple
    violations: tuple = ()
    calls: tuple = ()


def _ground(t, env, calls):
    if isinstance(t, Val):
        return t.value
    if isinstance(t, Var):
        return env[t.name]
    g = (t.fn, tuple(_ground(a, env, calls) for a in t.args))
    if g not in calls:
        calls.append(g)
    return ("$call", g)


def apply_action(spec: DcdsSpec, db: DbInstance, action: str, binding, oracle: Oracle) -> ActionResult:
    """All successors of executing ``action`` with ``binding`` on ``db``."""
    act = spec.action(action)
    env = dict(binding)
    calls = []
    heads = set()
    for eff in act.effects:
        for ans in answers(eff.query, db, env):
            for rel, terms in eff.facts:
                heads.add((rel, tuple(_ground(t, ans, calls) for t in terms)))
    calls = tuple(calls)
    succs, bad = [], []
    seen = set()
    for assignment in oracle(db, calls) if calls else [{}]:
        facts = frozenset(
            (rel, tuple(assignment[v[1]] if isinstance(v, tuple) and v and v[0] == "$call" else v
                        for v in tup))
            for rel, tup in heads
        )
        nxt = DbInstance(facts)
        viol = key_violations(spec.schema, nxt)
        if viol:
            bad.extend(viol)
            continue
        if facts not in seen:
            seen.add(facts)
            succs.append(nxt)
    return ActionResult(tuple(succs), tuple(bad), calls)


# --------------------------------------------------------------------------
# JSON


def _term_json(t):
    if isinstance(t, Var):
        return {"var": t.name}
    if isinstance(t, Val):
        return {"val": t.value}
    return {"call": t.fn, "args": [_term_json(a) for a in t.args]}


def _term_from(d):
    if "var" in d:
        return Var(d["var"])
    if "val" in d:
        return Val(d["val"])
    return Call(d["call"], tuple(_term_from(a) for a in d["args"]))


def query_to_json(q):
    if isinstance(q, QTrue):
        return {"true": True}
    if isinstance(q, QAtom):
        return {"atom": q.rel, "terms": [_term_json(t) for t in q.terms]}
    if isinstance(q, QEq):
        return {"eq": [_term_json(q.left), _term_json(q.right)]}
    if isinstance(q, QLess):
        return {"less": [_term_json(q.left), _term_json(q.right)]}
    if isinstance(q, QNot):
        return {"not": query_to_json(q.arg)}
    if isinstance(q, QAnd):
        return {"and": [query_to_json(a) for a in q.args]}
    if isinstance(q, QOr):
        return {"or": [query_to_json(a) for a in q.args]}
    return {"exists": list(q.vars), "body": query_to_json(q.body)}


def query_from_json(d):
    if "true" in d:
        return QTrue()
    if "atom" in d:
        return QAtom(d["atom"], tuple(_term_from(t) for t in d["terms"]))
    if "eq" in d:
        return QEq(*(_term_from(t) for t in d["eq"]))
    if "less" in d:
        return QLess(*(_term_from(t) for t in d["less"]))
    if "not" in d:
        return QNot(query_from_json(d["not"]))
    if "and" in d:
        return QAnd(tuple(query_from_json(a) for a in d["and"]))
    if "or" in d:
        return QOr(tuple(query_from_json(a) for a in d["or"]))
    return QExists(tuple(d["exists"]), query_from_json(d["body"]))


def spec_to_json(spec: DcdsSpec) -> dict:
    return {
        "schema": [{"name": r.name, "arity": r.arity, "key": list(r.key) if r.key is not None else None}
                   for r in spec.schema],
        "services": [{"name": n, "arity": a} for n, a in spec.services],
        "actions": [
            {"name": a.name, "params": list(a.params), "label": a.label,
             "effects": [{"query": query_to_json(e.query),
                          "facts": [{"rel": rel, "terms": [_term_json(t) for t in terms]}
                                    for rel, terms in e.facts]} for e in a.effects]}
            for a in spec.actions
        ],
        "rules": [{"name": r.name, "query": query_to_json(r.query), "action": r.action, "args": list(r.args)}
                  for r in spec.ca_rules],
        "initial": [{"rel": rel, "tuple": list(tup)} for rel, tup in spec.initial.sorted_facts()],
    }


def spec_from_json(d: dict) -> DcdsSpec:
    return DcdsSpec(
        schema=tuple(Relation(r["name"], r["arity"], tuple(r["key"]) if r["key"] is not None else None)
                     for r in d["schema"]),
        services=tuple((s["name"], s["arity"]) for s in d["services"]),
        actions=tuple(
            Action(a["name"], tuple(a["params"]),
                   tuple(EffectSpec(query_from_json(e["query"]),
                                    tuple((f["rel"], tuple(_term_from(t) for t in f["terms"]))
                                          for f in e["facts"])) for e in a["effects"]),
                   a.get("label", ""))
            for a in d["actions"]
        ),
        ca_rules=tuple(CARule(r["name"], query_from_json(r["query"]), r["action"], tuple(r["args"]))
                       for r in d["rules"]),
        initial=DbInstance(frozenset((f["rel"], tuple(f["tuple"])) for f in d["initial"])),
    )
