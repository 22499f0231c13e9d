"""Canonical renaming of states.

Conditions only compare values for equality, so two states that differ by
a bijective renaming of data values behave identically.  The canonical
form renames every value except null, booleans and protected constants
(those written in the model) to ``#1, #2, ...``.  Ranks come from colour
refinement over the fact structure; remaining ties are broken by trying
every member of the first tied class and keeping the least rendering.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dcds import DbInstance, value_key
from .model import InstanceState, Snapshot

PREFIX = "#"


def renameable(v, protected) -> bool:
    return v is not None and not isinstance(v, bool) and v not in protected


def _fact_key(f):
    return (f[0], tuple(value_key(v) for v in f[1]))


@dataclass(frozen=True)
class Canonical:
    facts: tuple
    renaming: dict  # original value -> canonical name


def canonical_facts(facts, protected=frozenset()) -> Canonical:
    """Canonical form of a set of ``(relation, tuple)`` facts."""
    facts = list(facts)
    occ = {}
    for i, (_, tup) in enumerate(facts):
        for p, v in enumerate(tup):
            if renameable(v, protected):
                occ.setdefault(v, []).append((i, p))
    if not occ:
        return Canonical(tuple(sorted(facts, key=_fact_key)), {})

    def lit(v, colors):
        return ("c", colors[v]) if v in colors else ("l", value_key(v))

    def refine(colors):
        n = len(set(colors.values()))
        while True:
            sigs = {}
            for v, places in occ.items():
                sigs[v] = (colors[v], tuple(sorted(
                    (facts[i][0], p, tuple(lit(w, colors) for w in facts[i][1])) for i, p in places)))
            order = {s: k for k, s in enumerate(sorted(set(sigs.values())))}
            new = {v: order[s] for v, s in sigs.items()}
            m = len(order)
            colors = new
            if m == n:
                return colors
            n = m

    def render(colors):
        ranks = sorted(colors, key=lambda v: colors[v])
        names = {v: f"{PREFIX}{k + 1}" for k, v in enumerate(ranks)}
        out = tuple(sorted(((r, tuple(names.get(v, v) if renameable(v, protected) else v for v in tup))
                            for r, tup in facts), key=_fact_key))
        return out, names

    best = [None]
    fact_set = frozenset(facts)

    def search(colors):
        colors = refine(colors)
        classes = {}
        for v, c in colors.items():
            classes.setdefault(c, []).append(v)
        tied = [c for c in sorted(classes) if len(classes[c]) > 1]
        if not tied:
            out, names = render(colors)
            if best[0] is None or _facts_key(out) < _facts_key(best[0][0]):
                best[0] = (out, names)
            return
        c = tied[0]
        tried = []
        for v in classes[c]:
            # a transposition that is an automorphism leads to the same leaf
            if any(_swap_is_automorphism(fact_set, u, v) for u in tried):
                continue
            tried.append(v)
            # individualize v: it sorts just before the rest of its class
            split = {w: (2 * k + (0 if w == v or k != c else 1)) for w, k in colors.items()}
            search(split)

    search({v: 0 for v in occ})
    out, names = best[0]
    return Canonical(out, names)


def _swap_is_automorphism(fact_set, u, v) -> bool:
    swap = {u: v, v: u}
    return all((r, tuple(swap.get(x, x) for x in tup)) in fact_set for r, tup in fact_set)


def _facts_key(facts):
    return tuple(_fact_key(f) for f in facts)


# --------------------------------------------------------------------------
# snapshots


def snapshot_facts(s: Snapshot) -> list:
    return [((i.type, tuple(sorted(i.open)), tuple(sorted(i.achieved))),
             (i.id,) + tuple(v for _, v in i.values)) for i in s.instances]


def canonical_snapshot(s: Snapshot, model, protected=None):
    """``(canonical snapshot, renaming)``."""
    protected = model.constants() if protected is None else protected
    c = canonical_facts(snapshot_facts(s), protected)
    insts = []
    for (tname, opened, achieved), tup in c.facts:
        at = model.type(tname)
        insts.append(InstanceState(tup[0], tname, tuple(zip(at.attribute_names(), tup[1:])),
                                   frozenset(opened), frozenset(achieved)))
    return Snapshot(tuple(insts)), c.renaming


def canonical_db(db: DbInstance, protected=frozenset()):
    c = canonical_facts(db.facts, protected)
    return DbInstance(frozenset(c.facts)), c.renaming


def snapshot_values(s: Snapshot, protected=frozenset()) -> set:
    """Renameable values occurring in ``s`` (its active domain minus constants)."""
    out = set()
    for i in s.instances:
        for v in (i.id,) + tuple(v for _, v in i.values):
            if renameable(v, protected):
                out.add(v)
    return out


def rename_snapshot(s: Snapshot, mapping: dict) -> Snapshot:
    return Snapshot(tuple(
        InstanceState(mapping.get(i.id, i.id), i.type,
                      tuple((k, mapping.get(v, v) if v is not None else None) for k, v in i.values),
                      i.open, i.achieved)
        for i in s.instances))


def fresh_values(n, avoid, base="~") -> list:
    out, k = [], 0
    while len(out) < n:
        k += 1
        v = f"{base}{k}"
        if v not in avoid:
            out.append(v)
    return out
