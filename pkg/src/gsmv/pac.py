"""Prerequisite-Antecedent-Consequent rules and their stratification.

Six templates cover the lifecycle constructs:

T1  open a stage when one of its guards holds (one rule per guard)
T2  achieve a milestone of an open stage when an achieving sentry holds
T3  close a stage when one of its milestones was just achieved
T4  invalidate a milestone when its stage was just (re)opened
T5  invalidate a milestone when one of its invalidating sentries holds
T6  dispatch the task of an atomic stage that was just opened

Prerequisites only test status attributes in the B-step-initial snapshot.
Antecedents test the current pre-snapshot, the status changes made so far
in the B-step, and the sentries.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from typing import Optional

from .model import GsmModel, Sentry, condition_status_polarity


class CycleError(Exception):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("rules are not stratifiable; dependency cycle: " + " -> ".join(self.cycle))


@dataclass(frozen=True)
class PacRule:
    id: str
    index: int
    owner: str
    template: str
    stage: str
    depth: int
    prerequisite: tuple = ()  # (status name, value) at the initial snapshot
    status: tuple = ()  # (status name, value) at the current pre-snapshot
    events_any: tuple = ()  # (sign, name): at least one happened in this B-step
    sentries: tuple = ()  # at least one must hold (empty = no sentry)
    untoggled: Optional[str] = None  # toggle-once on the written attribute
    target: str = ""  # status attribute written, or task dispatched by T6
    value: Optional[bool] = None  # new status value; None for dispatch

    @property
    def dispatch(self) -> bool:
        return self.template == "T6"

    @property
    def emitted(self) -> Optional[tuple]:
        if self.dispatch:
            return None
        return ("+" if self.value else "-", self.target)

    def writes(self) -> frozenset:
        """``(status name, value)`` pairs this rule can produce."""
        return frozenset() if self.dispatch else frozenset({(self.target, self.value)})

    def reads(self) -> frozenset:
        """``(status name, value)`` pairs that can help enable this rule.

        Status atoms inside sentry conditions count with the polarity they
        have after pushing negations inward.  The rule's own target is
        excluded.
        """
        needs = set(self.status)
        needs |= {(n, s == "+") for s, n in self.events_any}
        for s in self.sentries:
            needs |= _sentry_reads(s)
        if not self.dispatch:
            needs = {(n, v) for n, v in needs if n != self.target}
        return frozenset(needs)


def _sentry_reads(s: Sentry) -> set:
    out = set()
    if s.event is not None and s.event.kind == "internal":
        out.add((s.event.name, s.event.sign == "+"))
    if s.condition is not None:
        out |= set(condition_status_polarity(s.condition))
    return out


def derive_pac_rules(m: GsmModel) -> list:
    """Instantiate the T1-T6 templates for every lifecycle construct."""
    rules = []

    def add(owner, template, stage, depth, key, **kw):
        rid = f"{owner}/{template}/{key}"
        rules.append(PacRule(rid, len(rules), owner, template, stage.name, depth, **kw))

    for at in m.artifact_types:
        for stage, parent, depth in at.walk_stages():
            s = stage.name
            for gi, guard in enumerate(stage.guards):
                status = ((parent.name, True),) if parent is not None else ()
                add(at.name, "T1", stage, depth, f"{s}#{gi}",
                    prerequisite=((s, False),), status=status + ((s, False),),
                    sentries=(guard,), untoggled=s, target=s, value=True)
            for ms in stage.milestones:
                add(at.name, "T2", stage, depth, ms.name,
                    prerequisite=((ms.name, False),), status=((s, True), (ms.name, False)),
                    sentries=ms.achieving, untoggled=ms.name, target=ms.name, value=True)
            if stage.milestones:
                add(at.name, "T3", stage, depth, s,
                    prerequisite=((s, True),), status=((s, True),),
                    events_any=tuple(("+", ms.name) for ms in stage.milestones),
                    untoggled=s, target=s, value=False)
            for ms in stage.milestones:
                add(at.name, "T4", stage, depth, ms.name,
                    prerequisite=((ms.name, True),), status=((ms.name, True),),
                    events_any=(("+", s),), untoggled=ms.name, target=ms.name, value=False)
            for ms in stage.milestones:
                if ms.invalidating:
                    add(at.name, "T5", stage, depth, ms.name,
                        prerequisite=((ms.name, True),), status=((ms.name, True),),
                        sentries=ms.invalidating, untoggled=ms.name, target=ms.name, value=False)
            if stage.task is not None:
                add(at.name, "T6", stage, depth, stage.task,
                    prerequisite=((s, False),), events_any=(("+", s),), target=stage.task)
    return rules


def requires_toggled(r: PacRule) -> Optional[str]:
    """Status name that must already be toggled in the B-step for ``r`` to fire."""
    names = {n for _, n in r.events_any}
    if len(names) == 1:
        return names.pop()
    evs = {s.event.name if s.event is not None and s.event.kind == "internal" else None
           for s in r.sentries}
    if len(evs) == 1 and None not in evs:
        return evs.pop()
    return None


def dependency_edges(rules) -> set:
    """Pairs ``(r1.id, r2.id)``: r1 writes a status value r2 reads (same owner).

    No edge when r1 can only fire after r2's toggle-once attribute has
    flipped, since r2 is then disabled for the rest of the B-step.
    """
    edges = set()
    for r1 in rules:
        w = r1.writes()
        if not w:
            continue
        done = requires_toggled(r1)
        for r2 in rules:
            if r1 is r2 or r1.owner != r2.owner:
                continue
            if done is not None and r2.untoggled == done:
                continue
            if w & r2.reads():
                edges.add((r1.id, r2.id))
    return edges


def _sort_key(r):
    return (r.owner, r.depth, r.index)


@dataclass(frozen=True)
class RuleOrder:
    order: tuple  # rule ids
    edges: frozenset

    def position(self, rid) -> int:
        return self.order.index(rid)

    def predecessors(self, rid) -> tuple:
        return self.order[: self.order.index(rid)]


def stratify(rules) -> RuleOrder:
    """Topological order of the dependency DAG with a reproducible tie-break."""
    edges = dependency_edges(rules)
    by_id = {r.id: r for r in rules}
    indeg = {r.id: 0 for r in rules}
    succ = {r.id: [] for r in rules}
    for a, b in edges:
        indeg[b] += 1
        succ[a].append(b)
    heap = [(_sort_key(r), r.id) for r in rules if indeg[r.id] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, rid = heapq.heappop(heap)
        order.append(rid)
        for nxt in succ[rid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(heap, (_sort_key(by_id[nxt]), nxt))
    if len(order) != len(rules):
        raise CycleError(_find_cycle([r.id for r in rules if indeg[r.id] > 0], succ))
    return RuleOrder(tuple(order), frozenset(edges))


def _find_cycle(nodes, succ):
    nodes = set(nodes)
    color = {}
    stack = []

    def dfs(u):
        color[u] = 1
        stack.append(u)
        for v in succ[u]:
            if v not in nodes:
                continue
            if color.get(v) == 1:
                return stack[stack.index(v):] + [v]
            if v not in color:
                found = dfs(v)
                if found:
                    return found
        stack.pop()
        color[u] = 2
        return None

    for n in sorted(nodes):
        if n not in color:
            cyc = dfs(n)
            if cyc:
                return cyc
    return sorted(nodes)


def is_linear_extension(order, edges) -> bool:
    pos = {rid: i for i, rid in enumerate(order)}
    return all(pos[a] < pos[b] for a, b in edges)


def linear_extensions(rule_ids, edges, limit=None):
    """Enumerate linear extensions (at most ``limit`` of them)."""
    preds = {r: set() for r in rule_ids}
    for a, b in edges:
        if a in preds and b in preds:
            preds[b].add(a)
    out = []
    placed = []
    remaining = set(rule_ids)

    def rec():
        if limit is not None and len(out) >= limit:
            return
        if not remaining:
            out.append(tuple(placed))
            return
        for r in sorted(remaining):
            if preds[r] <= set(placed):
                remaining.discard(r)
                placed.append(r)
                rec()
                placed.pop()
                remaining.add(r)
                if limit is not None and len(out) >= limit:
                    return

    rec()
    return out


def random_linear_extension(rule_ids, edges, rng: random.Random) -> tuple:
    preds = {r: set() for r in rule_ids}
    for a, b in edges:
        if a in preds and b in preds:
            preds[b].add(a)
    placed, done = [], set()
    while len(placed) < len(rule_ids):
        ready = sorted(r for r in rule_ids if r not in done and preds[r] <= done)
        pick = rng.choice(ready)
        placed.append(pick)
        done.add(pick)
    return tuple(placed)


def explain(rules, order: RuleOrder) -> str:
    """Text report: one block per rule in firing order, then the edges."""
    from .syntax import format_sentry

    by_id = {r.id: r for r in rules}
    lines = []
    for pos, rid in enumerate(order.order):
        r = by_id[rid]
        pre = " and ".join(f"{'open/achieved' if v else 'closed/invalidated'}({n})"
                           for n, v in r.prerequisite) or "true"
        ante = [f"{n} = {v}" for n, v in r.status]
        if r.events_any:
            ante.append(" or ".join(f"{s}{n} happened" for s, n in r.events_any))
        if r.sentries:
            ante.append(" or ".join(f"[{format_sentry(s)}]" for s in r.sentries))
        if r.untoggled:
            ante.append(f"{r.untoggled} not yet toggled")
        cons = f"dispatch task {r.target}" if r.dispatch else f"set {r.target} := {r.value}, emit {r.emitted[0]}{r.target}"
        lines.append(f"[{pos}] {rid}")
        lines.append(f"    P: {pre}")
        lines.append(f"    A: {' and '.join(ante) or 'true'}")
        lines.append(f"    C: {cons}")
    lines.append("dependencies:")
    for a, b in sorted(order.edges):
        lines.append(f"    {a} -> {b}")
    return "\n".join(lines) + "\n"
