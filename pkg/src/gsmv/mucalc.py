"""Mu-calculus properties over explicit transition systems.

Formulas may quantify over the active domain of the current state.  A
quantified value is followed along edges through the value maps recorded
by the state-space builder; once it leaves the active domain it is
replaced by an anonymous token that equals only itself.  Next-state
operators under a quantifier must be guarded by ``live`` of every free
first-order variable, so properties only speak about values while they
persist.

Concrete syntax (ASCII)::

    mu Z. achieved("Halt") | <-> Z
    nu Z. !(achieved("receipt sent") & !achieved("Order paid")) & [-] Z
    exists x. live(x) & inst(Item, x) & <"add item"> (live(x) -> x.qty = "2")

Atoms: ``true``, ``false``, ``open(S)``, ``achieved(M)``, ``open(S, x)``,
``achieved(M, x)``, ``inst(T, x)``, ``live(x)`` and comparisons ``t = t``
or ``t != t`` over ``x``, ``x.attr``, quoted constants and ``null``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Optional

from .canon import renameable

# --------------------------------------------------------------------------
# syntax tree


class PropertyError(Exception):
    pass


@dataclass(frozen=True)
class TT:
    pass


@dataclass(frozen=True)
class FF:
    pass


@dataclass(frozen=True)
class Status:
    kind: str  # "open" | "achieved"
    name: str
    var: Optional[str] = None  # None: some instance


@dataclass(frozen=True)
class Inst:
    type: str
    var: str


@dataclass(frozen=True)
class Live:
    var: str


@dataclass(frozen=True)
class FVar:
    name: str


@dataclass(frozen=True)
class FAttr:
    var: str
    attr: str


@dataclass(frozen=True)
class FConst:
    value: object


@dataclass(frozen=True)
class Compare:
    op: str  # "=" | "!="
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Conj:
    args: tuple


@dataclass(frozen=True)
class Disj:
    args: tuple


@dataclass(frozen=True)
class Imp:
    left: object
    right: object


@dataclass(frozen=True)
class Dia:
    label: Optional[str]  # None: any edge
    arg: object


@dataclass(frozen=True)
class Box:
    label: Optional[str]
    arg: object


@dataclass(frozen=True)
class Mu:
    var: str
    body: object


@dataclass(frozen=True)
class Nu:
    var: str
    body: object


@dataclass(frozen=True)
class Rec:
    name: str


@dataclass(frozen=True)
class Exists:
    var: str
    body: object


@dataclass(frozen=True)
class Forall:
    var: str
    body: object


ATOMS = (TT, FF, Status, Inst, Live, Compare)


def children(f) -> tuple:
    if isinstance(f, (Neg,)):
        return (f.arg,)
    if isinstance(f, (Conj, Disj)):
        return f.args
    if isinstance(f, Imp):
        return (f.left, f.right)
    if isinstance(f, (Dia, Box)):
        return (f.arg,)
    if isinstance(f, (Mu, Nu, Exists, Forall)):
        return (f.body,)
    return ()


def _term_vars(t):
    if isinstance(t, FVar):
        return {t.name}
    if isinstance(t, FAttr):
        return {t.var}
    return set()


def fo_free(f) -> frozenset:
    """Free first-order variables."""
    if isinstance(f, Status):
        return frozenset({f.var} - {None})
    if isinstance(f, (Inst, Live)):
        return frozenset({f.var})
    if isinstance(f, Compare):
        return frozenset(_term_vars(f.left) | _term_vars(f.right))
    if isinstance(f, (Exists, Forall)):
        return fo_free(f.body) - {f.var}
    return frozenset().union(*(fo_free(c) for c in children(f)))


def has_quantifier(f) -> bool:
    return isinstance(f, (Exists, Forall)) or any(has_quantifier(c) for c in children(f))


def format_formula(f) -> str:
    def term(t):
        if isinstance(t, FVar):
            return t.name
        if isinstance(t, FAttr):
            return f"{t.var}.{t.attr}"
        return "null" if t.value is None else _quote(t.value)

    def lab(l):
        return "-" if l is None else _quote(l) if not re.fullmatch(r"[A-Za-z_]\w*", l) else l

    if isinstance(f, TT):
        return "true"
    if isinstance(f, FF):
        return "false"
    if isinstance(f, Status):
        extra = f", {f.var}" if f.var else ""
        return f"{f.kind}({_quote(f.name)}{extra})"
    if isinstance(f, Inst):
        return f"inst({f.type}, {f.var})"
    if isinstance(f, Live):
        return f"live({f.var})"
    if isinstance(f, Compare):
        return f"{term(f.left)} {f.op} {term(f.right)}"
    if isinstance(f, Neg):
        return f"!{_wrap(f.arg)}"
    if isinstance(f, Conj):
        return " & ".join(_wrap(a) for a in f.args)
    if isinstance(f, Disj):
        return " | ".join(_wrap(a) for a in f.args)
    if isinstance(f, Imp):
        return f"{_wrap(f.left)} -> {_wrap(f.right)}"
    if isinstance(f, Dia):
        return f"<{lab(f.label)}> {_wrap(f.arg)}"
    if isinstance(f, Box):
        return f"[{lab(f.label)}] {_wrap(f.arg)}"
    if isinstance(f, Rec):
        return f.name
    kw = {Mu: "mu", Nu: "nu", Exists: "exists", Forall: "forall"}[type(f)]
    return f"{kw} {f.var}. {format_formula(f.body)}"


def _wrap(f):
    s = format_formula(f)
    return s if isinstance(f, ATOMS + (Rec, Neg, Dia, Box)) and not isinstance(f, Compare) else f"({s})"


def _quote(v):
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


# --------------------------------------------------------------------------
# parser

_TOKEN = re.compile(r"""
    \s+ | (?P<str>"(?:[^"\\]|\\.)*") | (?P<num>-?\d+(?:\.\d+)?)
  | (?P<op><->|->|!=|<|>|\[|\]|\(|\)|\.|,|!|&|\||=|-)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)

KEYWORDS = {"mu", "nu", "exists", "forall", "true", "false", "null", "not", "and", "or",
            "open", "achieved", "inst", "live"}


def _tokens(text):
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PropertyError(f"unexpected character {text[pos]!r} at offset {pos}")
        pos = m.end()
        if m.lastgroup == "str":
            out.append(("str", re.sub(r"\\(.)", r"\1", m.group()[1:-1])))
        elif m.lastgroup == "num":
            out.append(("num", m.group()))
        elif m.lastgroup:
            kind = m.lastgroup
            val = m.group()
            if kind == "id" and val in ("not", "and", "or"):
                kind, val = "op", {"not": "!", "and": "&", "or": "|"}[val]
            out.append((kind, val))
    out.append(("eof", None))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self, k=0):
        return self.toks[self.i + k]

    def take(self, kind=None, val=None):
        t = self.toks[self.i]
        if (kind and t[0] != kind) or (val is not None and t[1] != val):
            want = val or kind
            raise PropertyError(f"expected {want!r}, found {t[1]!r}")
        self.i += 1
        return t

    def at(self, val):
        return self.peek()[0] in ("op", "id") and self.peek()[1] == val

    def formula(self):
        left = self.disj()
        if self.at("->"):
            self.take()
            return Imp(left, self.formula())
        return left

    def disj(self):
        args = [self.conj()]
        while self.at("|"):
            self.take()
            args.append(self.conj())
        return args[0] if len(args) == 1 else Disj(tuple(args))

    def conj(self):
        args = [self.unary()]
        while self.at("&"):
            self.take()
            args.append(self.unary())
        return args[0] if len(args) == 1 else Conj(tuple(args))

    def label(self, close):
        if self.at("-"):
            self.take()
            self.take("op", close)
            return None
        kind, val = self.peek()
        if kind not in ("id", "str"):
            raise PropertyError(f"expected an edge label, found {val!r}")
        self.take()
        self.take("op", close)
        return val

    def unary(self):
        kind, val = self.peek()
        if self.at("!"):
            self.take()
            return Neg(self.unary())
        if self.at("<->"):
            self.take()
            return Dia(None, self.unary())
        if self.at("<"):
            self.take()
            return Dia(self.label(">"), self.unary())
        if self.at("["):
            self.take()
            return Box(self.label("]"), self.unary())
        if kind == "id" and val in ("mu", "nu", "exists", "forall"):
            self.take()
            name = self.take("id")[1]
            if val in ("mu", "nu") and not name[0].isupper():
                raise PropertyError(f"fixpoint variable must start upper-case: {name!r}")
            if val in ("exists", "forall") and not name[0].islower():
                raise PropertyError(f"first-order variable must start lower-case: {name!r}")
            self.take("op", ".")
            body = self.formula()
            return {"mu": Mu, "nu": Nu, "exists": Exists, "forall": Forall}[val](name, body)
        if self.at("("):
            self.take()
            f = self.formula()
            self.take("op", ")")
            return f
        return self.atom()

    def name_arg(self):
        kind, val = self.peek()
        if kind not in ("id", "str"):
            raise PropertyError(f"expected a name, found {val!r}")
        self.take()
        return val

    def atom(self):
        kind, val = self.peek()
        if kind == "id" and val in ("true", "false"):
            self.take()
            return TT() if val == "true" else FF()
        if kind == "id" and val in ("open", "achieved") and self.peek(1)[1] == "(":
            self.take()
            self.take("op", "(")
            name = self.name_arg()
            var = None
            if self.at(","):
                self.take()
                var = self.take("id")[1]
            self.take("op", ")")
            return Status(val, name, var)
        if kind == "id" and val in ("inst", "live") and self.peek(1)[1] == "(":
            self.take()
            self.take("op", "(")
            if val == "inst":
                t = self.name_arg()
                self.take("op", ",")
                v = self.take("id")[1]
                self.take("op", ")")
                return Inst(t, v)
            v = self.take("id")[1]
            self.take("op", ")")
            return Live(v)
        if kind == "id" and val[0].isupper() and self.peek(1)[1] != ".":
            self.take()
            return Rec(val)
        left = self.term()
        if not (self.at("=") or self.at("!=")):
            raise PropertyError(f"expected a comparison after {format_formula(Compare('=', left, left)).split(' =')[0]!r}")
        op = self.take()[1]
        return Compare(op, left, self.term())

    def term(self):
        kind, val = self.peek()
        if kind == "str":
            self.take()
            return FConst(val)
        if kind == "num":
            self.take()
            return FConst(float(val) if "." in val else int(val))
        if kind == "id" and val == "null":
            self.take()
            return FConst(None)
        if kind == "id" and val not in KEYWORDS:
            self.take()
            if self.at("."):
                self.take()
                return FAttr(val, self.name_arg())
            return FVar(val)
        raise PropertyError(f"expected a term, found {val!r}")


def parse_property(text: str):
    """Parse and well-formedness-check a property."""
    p = _Parser(text)
    f = p.formula()
    if p.peek()[0] != "eof":
        raise PropertyError(f"unexpected {p.peek()[1]!r} after the formula")
    check_formula(f)
    return f


def check_formula(f):
    """Closedness, positivity of fixpoint variables and the liveness guard."""
    if fo_free(f):
        raise PropertyError(f"free first-order variables: {sorted(fo_free(f))}")
    _positivity(f, {}, True)
    _guarded(f, frozenset())
    return f


def _positivity(f, bound, positive):
    if isinstance(f, Rec):
        if f.name not in bound:
            raise PropertyError(f"unbound fixpoint variable {f.name!r}")
        if bound[f.name] != positive:
            raise PropertyError(f"fixpoint variable {f.name!r} occurs negatively")
        return
    if isinstance(f, (Mu, Nu)):
        _positivity(f.body, {**bound, f.var: positive}, positive)
    elif isinstance(f, Neg):
        _positivity(f.arg, bound, not positive)
    elif isinstance(f, Imp):
        _positivity(f.left, bound, not positive)
        _positivity(f.right, bound, positive)
    else:
        for c in children(f):
            _positivity(c, bound, positive)


def _live_vars(f) -> set:
    """Variables asserted live by ``f`` read as a conjunction."""
    if isinstance(f, Live):
        return {f.var}
    if isinstance(f, Conj):
        return set().union(*(_live_vars(a) for a in f.args))
    return set()


def _guarded(f, covered):
    """Every modality under a quantifier is guarded by live() of its free variables."""
    if isinstance(f, (Dia, Box)):
        need = fo_free(f.arg) - covered
        if need:
            raise PropertyError(
                f"next-state operator uses {sorted(need)} without a live() guard: {format_formula(f)}")
        _guarded(f.arg, frozenset())
        return
    if isinstance(f, Conj):
        live = frozenset(set().union(*(_live_vars(a) for a in f.args)))
        for a in f.args:
            _guarded(a, covered | live)
        return
    if isinstance(f, Imp):
        _guarded(f.left, covered)
        _guarded(f.right, covered | frozenset(_live_vars(f.left)))
        return
    if isinstance(f, (Mu, Nu)):
        # the body is re-entered after steps: guards must sit inside it
        _guarded(f.body, frozenset())
        return
    for c in children(f):
        _guarded(c, covered)


# --------------------------------------------------------------------------
# negation normal form


def nnf(f, neg=False):
    if isinstance(f, Neg):
        return nnf(f.arg, not neg)
    if isinstance(f, Imp):
        return nnf(Disj((Neg(f.left), f.right)), neg)
    if isinstance(f, TT):
        return FF() if neg else f
    if isinstance(f, FF):
        return TT() if neg else f
    if isinstance(f, ATOMS):
        return Neg(f) if neg else f
    if isinstance(f, Rec):
        return f  # positivity: negations around it cancel
    if isinstance(f, (Conj, Disj)):
        kind = type(f) if not neg else (Disj if isinstance(f, Conj) else Conj)
        return kind(tuple(nnf(a, neg) for a in f.args))
    if isinstance(f, Dia):
        return (Box if neg else Dia)(f.label, nnf(f.arg, neg))
    if isinstance(f, Box):
        return (Dia if neg else Box)(f.label, nnf(f.arg, neg))
    if isinstance(f, Mu):
        return (Nu if neg else Mu)(f.var, nnf(f.body, neg))
    if isinstance(f, Nu):
        return (Mu if neg else Nu)(f.var, nnf(f.body, neg))
    if isinstance(f, Exists):
        return (Forall if neg else Exists)(f.var, nnf(f.body, neg))
    if isinstance(f, Forall):
        return (Exists if neg else Forall)(f.var, nnf(f.body, neg))
    raise TypeError(f)


def alternation_depth(f) -> int:
    """Longest chain of alternating, mutually dependent fixpoints."""
    def rec(g, outer):
        if isinstance(g, (Mu, Nu)):
            best = 1
            for kind, var, d in outer:
                if kind is not type(g) and _mentions(g.body, var):
                    best = max(best, d + 1)
                elif kind is type(g) and _mentions(g.body, var):
                    best = max(best, d)
            return max(best, rec(g.body, outer + [(type(g), g.var, best)]))
        return max([0] + [rec(c, outer) for c in children(g)])
    return rec(nnf(f), [])


def _mentions(f, var):
    return (isinstance(f, Rec) and f.name == var) or any(_mentions(c, var) for c in children(f))


# --------------------------------------------------------------------------
# model checking


@dataclass(frozen=True)
class Gone:
    """A value that left the active domain; ``k`` numbers distinct such values."""

    k: int


@dataclass(frozen=True)
class CheckResult:
    holds: bool
    sat: frozenset  # states satisfying the (closed) formula
    witness: Optional[tuple] = None  # edges
    witness_kind: Optional[str] = None  # "witness" | "counterexample"


class _State:
    """Per-state data the checker needs."""

    def __init__(self, ts):
        self.ts = ts
        self.n = len(ts)
        self.protected = ts.protected()
        self.adom = []
        self.by_id = []
        for s in ts.snapshots:
            vals = set()
            for i in s.instances:
                for v in (i.id,) + tuple(v for _, v in i.values):
                    if v is not None and not isinstance(v, bool):
                        vals.add(v)
            self.adom.append(sorted(vals, key=lambda v: (type(v).__name__, str(v))))
            self.by_id.append({i.id: i for i in s.instances})
        self.succ = [[(e.label, e.dst, dict(e.values)) for e in ts.succ(i)] for i in range(self.n)]

    def move(self, vals, emap):
        out, gone = [], {}
        for x in vals:
            if x in emap:
                out.append(emap[x])
            elif isinstance(x, Gone) or renameable(x, self.protected):
                out.append(gone.setdefault(x, Gone(len(gone))))
            else:
                out.append(x)
        return tuple(out)


class _Checker:
    def __init__(self, ts):
        self.st = _State(ts)
        self.universes = {}
        self.ranks = None

    def universe(self, arity):
        if arity not in self.universes:
            u = set()
            gone = [Gone(k) for k in range(arity)]
            for s in range(self.st.n):
                for vals in itertools.product(self.st.adom[s] + gone, repeat=arity):
                    u.add((s, vals))
            self.universes[arity] = frozenset(u)
        return self.universes[arity]

    def term(self, t, s, ctx, vals):
        """``(defined, value)``."""
        if isinstance(t, FConst):
            return True, t.value
        idx = _index(ctx, t.var if isinstance(t, FAttr) else t.name)
        v = vals[idx]
        if isinstance(t, FVar):
            return True, v
        inst = self.st.by_id[s].get(v)
        if inst is None or t.attr not in dict(inst.values):
            return False, None
        return True, inst.get(t.attr)

    def atom(self, f, s, ctx, vals) -> bool:
        if isinstance(f, TT):
            return True
        if isinstance(f, FF):
            return False
        if isinstance(f, Status):
            insts = self.st.ts.snapshots[s].instances
            if f.var is not None:
                i = self.st.by_id[s].get(vals[_index(ctx, f.var)])
                insts = (i,) if i is not None else ()
            field_ = "open" if f.kind == "open" else "achieved"
            return any(f.name in getattr(i, field_) for i in insts)
        if isinstance(f, Inst):
            i = self.st.by_id[s].get(vals[_index(ctx, f.var)])
            return i is not None and i.type == f.type
        if isinstance(f, Live):
            return vals[_index(ctx, f.var)] in self.st.adom[s]
        if isinstance(f, Compare):
            lb, lv = self.term(f.left, s, ctx, vals)
            rb, rv = self.term(f.right, s, ctx, vals)
            if not (lb and rb):
                return False
            eq = lv == rv and type(lv) is type(rv) or (lv is None and rv is None)
            return eq if f.op == "=" else not eq
        raise TypeError(f)

    def sat(self, f, ctx, env, top=False) -> frozenset:
        u = self.universe(len(ctx))
        if isinstance(f, ATOMS):
            return frozenset(p for p in u if self.atom(f, p[0], ctx, p[1]))
        if isinstance(f, Neg):
            return u - self.sat(f.arg, ctx, env)
        if isinstance(f, Conj):
            out = u
            for a in f.args:
                out = out & self.sat(a, ctx, env)
            return out
        if isinstance(f, Disj):
            out = frozenset()
            for a in f.args:
                out = out | self.sat(a, ctx, env)
            return out
        if isinstance(f, Rec):
            bound_ctx, x = env[f.name]
            k = len(bound_ctx)
            return frozenset(p for p in u if (p[0], p[1][:k]) in x)
        if isinstance(f, (Dia, Box)):
            inner = self.sat(f.arg, ctx, env)
            out = set()
            for s, vals in u:
                hits = (
                    (s2, self.st.move(vals, emap)) in inner
                    for lab, s2, emap in self.st.succ[s] if f.label is None or lab == f.label)
                if (any(hits) if isinstance(f, Dia) else all(hits)):
                    out.add((s, vals))
            return frozenset(out)
        if isinstance(f, (Exists, Forall)):
            inner = self.sat(f.body, ctx + (f.var,), env)
            pick = any if isinstance(f, Exists) else all
            return frozenset(
                (s, vals) for s, vals in u
                if pick((s, vals + (d,)) in inner for d in self.st.adom[s]))
        if isinstance(f, (Mu, Nu)):
            x = frozenset() if isinstance(f, Mu) else u
            ranks = {}
            rnd = 0
            while True:
                nxt = self.sat(f.body, ctx, {**env, f.var: (ctx, x)})
                rnd += 1
                if top and isinstance(f, Mu):
                    for p in nxt - x:
                        ranks.setdefault(p, rnd)
                if nxt == x:
                    break
                x = nxt
            if top:
                self.ranks = ranks
            return x
        raise TypeError(f)


def _index(ctx, name):
    for k in range(len(ctx) - 1, -1, -1):
        if ctx[k] == name:
            return k
    raise PropertyError(f"unbound variable {name!r}")


def check(ts, formula, allow_truncated: bool = False) -> CheckResult:
    """Evaluate a closed formula; extracts a path for top-level least/greatest fixpoints.

    A ``mu`` formula that holds yields a witness path along decreasing
    approximation ranks; a ``nu`` formula that fails yields a counterexample
    path, obtained as the witness of its negation.
    """
    if isinstance(formula, str):
        formula = parse_property(formula)
    else:
        check_formula(formula)
    if ts.truncated and not allow_truncated:
        raise PropertyError("transition system is truncated; pass allow_truncated to check it anyway")
    g = nnf(formula)
    c = _Checker(ts)
    sat = frozenset(s for s, _ in c.sat(g, (), {}, top=True))
    holds = ts.initial in sat
    if isinstance(g, Mu) and holds:
        return CheckResult(holds, sat, _walk(c, ts.initial), "witness")
    if isinstance(g, Nu) and not holds:
        c2 = _Checker(ts)
        c2.sat(nnf(formula, True), (), {}, top=True)
        return CheckResult(holds, sat, _walk(c2, ts.initial), "counterexample")
    return CheckResult(holds, sat)


def _walk(c, start) -> tuple:
    ranks = {s: r for (s, _), r in c.ranks.items()}
    path, s = [], start
    while True:
        best = None
        for e in c.st.ts.succ(s):
            r = ranks.get(e.dst)
            if r is not None and r < ranks[s] and (best is None or r < ranks[best.dst]):
                best = e
        if best is None:
            return tuple(path)
        path.append(best)
        s = best.dst


def check_brute(ts, formula) -> bool:
    """Independent evaluator for quantifier-free formulas on small systems.

    Works state by state and unfolds every fixpoint a fixed number of
    times (one more than the number of states), which always suffices
    for monotone bodies on a finite system.
    """
    if isinstance(formula, str):
        formula = parse_property(formula)
    if has_quantifier(formula):
        raise PropertyError("the brute-force evaluator handles quantifier-free formulas only")
    if len(ts) > 12:
        raise PropertyError("the brute-force evaluator is limited to 12 states")
    states = range(len(ts))
    succ = {s: [(e.label, e.dst) for e in ts.succ(s)] for s in states}
    snaps = ts.snapshots

    def ev(f, s, env) -> bool:
        if isinstance(f, TT):
            return True
        if isinstance(f, FF):
            return False
        if isinstance(f, Status):
            attr = "open" if f.kind == "open" else "achieved"
            return any(f.name in getattr(i, attr) for i in snaps[s].instances)
        if isinstance(f, (Inst, Live, Compare)):
            raise PropertyError("atom needs a bound variable")
        if isinstance(f, Neg):
            return not ev(f.arg, s, env)
        if isinstance(f, Conj):
            return all(ev(a, s, env) for a in f.args)
        if isinstance(f, Disj):
            return any(ev(a, s, env) for a in f.args)
        if isinstance(f, Imp):
            return (not ev(f.left, s, env)) or ev(f.right, s, env)
        if isinstance(f, Dia):
            return any(ev(f.arg, t, env) for lab, t in succ[s] if f.label in (None, lab))
        if isinstance(f, Box):
            return all(ev(f.arg, t, env) for lab, t in succ[s] if f.label in (None, lab))
        if isinstance(f, Rec):
            return s in env[f.name]
        if isinstance(f, (Mu, Nu)):
            return s in fix(f, env)
        raise TypeError(f)

    memo = {}

    def fix(f, env):
        # the result depends only on the approximations of its free variables
        key = (id(f), tuple(sorted((k, v) for k, v in env.items() if _mentions(f, k))))
        if key in memo:
            return memo[key]
        x = set() if isinstance(f, Mu) else set(states)
        for _ in range(len(ts) + 1):
            inner = {**env, f.var: frozenset(x)}
            x = {t for t in states if ev(f.body, t, inner)}
        memo[key] = frozenset(x)
        return memo[key]

    return ev(formula, ts.initial, {})
