"""Seeded generators shared by the property tests and the acceptance run."""

from dataclasses import replace

from gsmv.model import Snapshot
from gsmv.mucalc import Box, Conj, Dia, Disj, FF, Mu, Neg, Nu, Rec, Status, TT, alternation_depth
from gsmv.statespace import Edge, TransitionSystem

LABELS = ("a", "b")
MILESTONES = ("item added", "Order paid")


def make_ts(model, contents, edges, initial=0):
    """Hand-built system whose states differ only in achieved milestones."""
    base = model.initial_snapshot.instances[0]
    ts = TransitionSystem("test", model)
    for k, ms in enumerate(contents):
        ts.add_state(("s", k), Snapshot((replace(base, achieved=frozenset(ms)),)), 1, 0)
    for a, label, b in edges:
        ts.add_edge(Edge(a, label, b))
    ts.initial = initial
    return ts


def random_ts(rng, model, max_states=12):
    n = rng.randint(1, max_states)
    contents = [[m for m in MILESTONES if rng.random() < 0.4] for _ in range(n)]
    edges = [(rng.randrange(n), rng.choice(LABELS), rng.randrange(n)) for _ in range(rng.randint(0, 2 * n))]
    return make_ts(model, contents, edges)


def _formula(rng, depth, bound):
    if depth <= 0 or rng.random() < 0.2:
        choices = ["tt", "ff", "atom", "natom"] + (["rec"] * 3 if bound else [])
        kind = rng.choice(choices)
        if kind == "tt":
            return TT()
        if kind == "ff":
            return FF()
        if kind == "rec":
            return Rec(rng.choice(bound))
        atom = Status(rng.choice(("achieved", "open")), rng.choice(MILESTONES + ("Pay order",)), None)
        return atom if kind == "atom" else Neg(atom)
    kind = rng.choice(["and", "or", "dia", "box", "mu", "nu"])
    if kind in ("and", "or"):
        args = (_formula(rng, depth - 1, bound), _formula(rng, depth - 1, bound))
        return Conj(args) if kind == "and" else Disj(args)
    if kind in ("dia", "box"):
        label = rng.choice(LABELS + (None,))
        return (Dia if kind == "dia" else Box)(label, _formula(rng, depth - 1, bound))
    var = f"Z{len(bound)}"
    return (Mu if kind == "mu" else Nu)(var, _formula(rng, depth - 1, bound + [var]))


def random_formula(rng, depth=5, max_alternation=2):
    """Closed, positive, quantifier-free formula of bounded alternation depth."""
    while True:
        f = _formula(rng, depth, [])
        if alternation_depth(f) <= max_alternation:
            return f
