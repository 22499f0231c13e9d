"""Explicit transition systems of GSM models and of their DCDS translations.

States are stored in canonical form, so exploration is finite whenever
the model is state-bounded and payload values are drawn from the current
active domain, the model constants and a few fresh representatives.
Every edge records how the values of its source are named in its target,
which lets a property track a value across steps.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Union

from .canon import canonical_db, canonical_snapshot, fresh_values, snapshot_values
from .dcds import DbInstance, DcdsError, apply_action, enabled_actions
from .engine import EngineError, b_step, return_admissible
from .model import CREATE, EventInstance, GsmModel, Snapshot
from .translate import filter_state, is_unblocked, aux_bound_violations

log = logging.getLogger(__name__)


class TruncatedError(Exception):
    pass


def max_payload_slots(model: GsmModel) -> int:
    """Most payload values a single incoming event can carry."""
    k = 0
    for e in model.event_types:
        k = max(k, len(e.payload))
    for at in model.artifact_types:
        for t in at.tasks:
            k = max(k, len(t.outputs))
    return k


@dataclass(frozen=True)
class AbstractionPolicy:
    """Payload values range over the active domain, the model constants and
    ``fresh`` distinguished fresh representatives."""

    fresh: int

    @classmethod
    def for_model(cls, model: GsmModel, extra: int = 0) -> "AbstractionPolicy":
        return cls(max_payload_slots(model) + extra)

    def domain(self, live, avoid) -> list:
        return sorted(live) + fresh_values(self.fresh, avoid)


@dataclass(frozen=True)
class Edge:
    src: int
    label: str
    dst: int
    values: tuple = ()  # (value in src, same value in dst)


@dataclass
class TransitionSystem:
    kind: str
    model: GsmModel
    states: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # GSM view of each state
    sizes: list = field(default_factory=list)
    depth: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    initial: int = 0
    truncated: bool = False
    frontier: set = field(default_factory=set)  # states left unexpanded
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._index = {}
        self._succ = None

    def add_state(self, state, snapshot, size, depth) -> tuple:
        """``(id, is_new)``."""
        if state in self._index:
            return self._index[state], False
        i = len(self.states)
        self._index[state] = i
        self.states.append(state)
        self.snapshots.append(snapshot)
        self.sizes.append(size)
        self.depth.append(depth)
        self._succ = None
        return i, True

    def index(self, state) -> Optional[int]:
        return self._index.get(state)

    def add_edge(self, e: Edge):
        self.edges.append(e)
        self._succ = None

    def succ(self, i) -> list:
        if self._succ is None:
            self._succ = [[] for _ in self.states]
            seen = set()
            for e in self.edges:
                k = (e.src, e.label, e.dst, e.values)
                if k not in seen:
                    seen.add(k)
                    self._succ[e.src].append(e)
        return self._succ[i]

    def __len__(self):
        return len(self.states)

    def protected(self) -> frozenset:
        return self.model.constants()

    def values(self, i) -> set:
        """Renameable values in the GSM view of state ``i``."""
        return snapshot_values(self.snapshots[i], self.protected())

    def key(self, i):
        """Label compared by bisimulation: canonical GSM content plus truncation."""
        snap, _ = canonical_snapshot(self.snapshots[i], self.model)
        return (snap, i in self.frontier)

    def distances(self) -> dict:
        """Edge distance from the initial state to every reachable state."""
        dist = {self.initial: 0}
        q = deque([self.initial])
        while q:
            u = q.popleft()
            for e in self.succ(u):
                if e.dst not in dist:
                    dist[e.dst] = dist[u] + 1
                    q.append(e.dst)
        return dist

    def path_to(self, target) -> list:
        """Shortest edge path from the initial state to ``target``."""
        parent = {self.initial: None}
        q = deque([self.initial])
        while q:
            u = q.popleft()
            if u == target:
                break
            for e in self.succ(u):
                if e.dst not in parent:
                    parent[e.dst] = e
                    q.append(e.dst)
        if target not in parent:
            return None
        path = []
        cur = target
        while parent[cur] is not None:
            path.append(parent[cur])
            cur = parent[cur].src
        return list(reversed(path))


# --------------------------------------------------------------------------
# environment moves of a GSM snapshot


def gsm_events(model: GsmModel, s: Snapshot, policy: AbstractionPolicy, containers=None) -> list:
    """Every incoming event the environment may send in ``s`` under ``policy``."""
    protected = model.constants()
    live = snapshot_values(s, protected) | set(protected)
    everything = {v for i in s.instances for v in (i.id,) + tuple(v for _, v in i.values)}
    domain = policy.domain(live, everything | live)
    new_id = fresh_values(1, everything | set(domain), base="~n")[0]
    out = []
    for e in model.event_types:
        for inst in s.of_type(e.target):
            for combo in itertools.product(domain, repeat=len(e.payload)):
                out.append(EventInstance(e.name, inst.id, tuple(zip(e.payload, combo))))
    for at in model.artifact_types:
        for task in at.tasks:
            for inst in s.of_type(at.name):
                if not return_admissible(model, s, inst, task.name, containers):
                    continue
                nid = new_id if task.kind == CREATE else None
                for combo in itertools.product(domain, repeat=len(task.outputs)):
                    out.append(EventInstance(task.name, inst.id, tuple(zip(task.outputs, combo)), nid))
    return out


def _edge_values(src_values, renaming) -> tuple:
    return tuple(sorted((v, renaming[v]) for v in src_values if v in renaming))


def build_gsm_ts(program, policy: Optional[AbstractionPolicy] = None, s0: Optional[Snapshot] = None,
                 max_states: Optional[int] = None, max_depth: Optional[int] = None,
                 containers=None, order: str = "bfs", stop=None) -> TransitionSystem:
    """Exploration of B-steps over canonical snapshots.

    ``stop`` is an optional predicate on snapshots: exploration ends (as
    truncated) once a state satisfying it has been added.

    ``order="dfs"`` is a depth-first search that follows the first new
    successor before trying the next one, task returns ahead of incoming
    requests, so it reaches deep states within a small budget; depths are
    then discovery depths rather than distances.
    """
    if order not in ("bfs", "dfs"):
        raise ValueError(f"unknown exploration order {order!r}")
    model = program.model
    policy = policy or AbstractionPolicy.for_model(model)
    containers = dict(containers.bounds) if hasattr(containers, "bounds") else containers
    ts = TransitionSystem("gsm", model, meta={"policy": policy.fresh, "containers": containers,
                                              "order": order})
    c0, _ = canonical_snapshot(s0 or model.initial_snapshot, model)
    ts.add_state(c0, c0, c0.size(), 0)
    external = {e.name for e in model.event_types}

    def expand(i):
        """Add the successors of ``i`` one by one, yielding each new state."""
        if max_depth is not None and ts.depth[i] >= max_depth:
            ts.frontier.add(i)
            return
        s = ts.states[i]
        src_vals = ts.values(i)
        events = gsm_events(model, s, policy, containers)
        if order == "dfs":
            # answer pending tasks before taking new requests
            events.sort(key=lambda e: e.type in external)
        for ev in events:
            try:
                nxt, _ = b_step(program, s, ev, containers=containers)
            except EngineError:
                continue
            c, ren = canonical_snapshot(nxt, model)
            j = ts.index(c)
            new = j is None
            if new:
                if max_states is not None and len(ts) >= max_states:
                    ts.truncated = True
                    ts.frontier.add(i)
                    continue
                j, _ = ts.add_state(c, c, c.size(), ts.depth[i] + 1)
            ts.add_edge(Edge(i, ev.type, j, _edge_values(src_vals, ren)))
            if new and stop is not None and stop(c):
                ts.truncated = True
                ts.frontier.add(i)
                return
            if new:
                yield j

    if order == "bfs":
        queue = deque([0])
        while queue and not (stop is not None and ts.truncated):
            queue.extend(expand(queue.popleft()))
        if stop is not None and ts.truncated:
            ts.frontier.update(queue)
    else:
        # once the budget is spent, unfinished states stay on the frontier
        stack = [(0, expand(0))]
        done = set()
        while stack and not ts.truncated:
            i, it = stack[-1]
            j = next(it, None)
            if j is None:
                stack.pop()
                done.add(i)
            else:
                stack.append((j, expand(j)))
        ts.frontier.update(k for k in range(len(ts)) if k not in done)
    if max_depth is not None and ts.frontier:
        ts.truncated = True
    return ts


# --------------------------------------------------------------------------
# DCDS exploration


def _dcds_oracle(domain, fresh_id):
    def oracle(db, calls):
        plain = [c for c in calls if not c[0].startswith("new:")]
        news = [c for c in calls if c[0].startswith("new:")]
        for combo in itertools.product(domain, repeat=len(plain)):
            a = dict(zip(plain, combo))
            for k, c in enumerate(news):
                a[c] = f"{fresh_id}{k}"
            yield a
    return oracle


def build_dcds_ts(spec, tmap, policy: Optional[AbstractionPolicy] = None,
                  max_states: Optional[int] = None, max_depth: Optional[int] = None,
                  check_aux_bounds: bool = False) -> TransitionSystem:
    """Unblocked-state transition system of a translated model.

    Each edge collapses the blocked micro-step run started by one event
    rule.  Every interleaving of the run is explored; they must all reach
    the same unblocked state, otherwise :class:`DcdsError` is raised.
    """
    model = tmap.program.model
    policy = policy or AbstractionPolicy.for_model(model)
    protected = model.constants()
    ts = TransitionSystem("dcds", model, meta={"policy": policy.fresh, "max_chain": 0,
                                               "micro_states": 0, "aux_bound_violations": []})
    d0, _ = canonical_db(spec.initial, protected)
    ts.add_state(d0, filter_state(tmap, d0), d0.size(), 0)
    event_rules = {name for name, _ in tmap.event_rules}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        if max_depth is not None and ts.depth[i] >= max_depth:
            ts.frontier.add(i)
            continue
        db = ts.states[i]
        snap = ts.snapshots[i]
        live = snapshot_values(snap, protected) | set(protected)
        avoid = db.adom() | live
        domain = policy.domain(live, avoid)
        oracle = _dcds_oracle(domain, fresh_values(1, avoid | set(domain), base="~n")[0])
        src_vals = ts.values(i)
        if check_aux_bounds:
            _check_aux(ts, tmap, db)
        for en in enabled_actions(spec, db):
            if en.rule not in event_rules:
                raise DcdsError(f"micro-step rule {en.rule} enabled in an unblocked state")
            label = spec.action(en.action).label
            res = apply_action(spec, db, en.action, en.binding, oracle)
            for succ in res.successors:
                final = _run_blocked(spec, tmap, succ, ts, check_aux_bounds)
                c, ren = canonical_db(final, protected)
                j = ts.index(c)
                if j is None:
                    if max_states is not None and len(ts) >= max_states:
                        ts.truncated = True
                        ts.frontier.add(i)
                        continue
                    j, _ = ts.add_state(c, filter_state(tmap, c), c.size(), ts.depth[i] + 1)
                    queue.append(j)
                ts.add_edge(Edge(i, label, j, _edge_values(src_vals, ren)))
    if max_depth is not None and ts.frontier:
        ts.truncated = True
    return ts


def _check_aux(ts, tmap, db):
    v = aux_bound_violations(tmap, db)
    if v:
        ts.meta["aux_bound_violations"].extend(v)


def _run_blocked(spec, tmap, start: DbInstance, ts, check_aux_bounds) -> DbInstance:
    """Explore all micro-step interleavings from ``start`` to unblocked states."""
    results = set()
    on_path = set()

    def dfs(db, depth):
        ts.meta["micro_states"] += 1
        if check_aux_bounds:
            _check_aux(ts, tmap, db)
        if is_unblocked(db):
            results.add(db)
            ts.meta["max_chain"] = max(ts.meta["max_chain"], depth)
            return
        if db in on_path:
            raise DcdsError("cycle among blocked micro-step states")
        on_path.add(db)
        en = enabled_actions(spec, db)
        if not en:
            raise DcdsError("blocked state with no applicable micro-step")
        for a in en:
            for nxt in apply_action(spec, db, a.action, a.binding, _no_calls).successors:
                dfs(nxt, depth + 1)
        on_path.discard(db)

    dfs(start, 0)
    if len(results) != 1:
        raise DcdsError(f"micro-step interleavings reach {len(results)} different unblocked states")
    return next(iter(results))


def _no_calls(db, calls):
    if calls:
        raise DcdsError("service call inside a micro-step")
    yield {}


def filtered_ts(ts: TransitionSystem) -> TransitionSystem:
    """The DCDS system seen through :func:`filter_state` (already stored per state)."""
    out = TransitionSystem("dcds-filtered", ts.model, meta=dict(ts.meta))
    for i, s in enumerate(ts.states):
        out.add_state(("dcds", i), ts.snapshots[i], ts.snapshots[i].size(), ts.depth[i])
    out.edges = list(ts.edges)
    out.initial, out.truncated, out.frontier = ts.initial, ts.truncated, set(ts.frontier)
    return out


# --------------------------------------------------------------------------
# bisimulation


@dataclass(frozen=True)
class Equivalent:
    blocks: int

    def __bool__(self):
        return True


@dataclass(frozen=True)
class CounterexamplePair:
    left: int
    right: int
    path: tuple  # edge labels from the initial pair
    reason: str

    def __bool__(self):
        return False


def check_bisimulation(t1: TransitionSystem, t2: TransitionSystem) -> Union[Equivalent, CounterexamplePair]:
    """Strong bisimulation of the initial states by partition refinement.

    States are labelled by :meth:`TransitionSystem.key`, edges by their label.
    """
    nodes = [(0, i) for i in range(len(t1))] + [(1, i) for i in range(len(t2))]
    ts = (t1, t2)
    keys = {n: ts[n[0]].key(n[1]) for n in nodes}
    ids = {}
    block = {n: ids.setdefault(keys[n], len(ids)) for n in nodes}
    rounds = [dict(block)]
    while True:
        sig = {}
        for n in nodes:
            moves = frozenset((e.label, block[(n[0], e.dst)]) for e in ts[n[0]].succ(n[1]))
            sig[n] = (block[n], moves)
        ids = {}
        new = {n: ids.setdefault(sig[n], len(ids)) for n in nodes}
        if len(set(new.values())) == len(set(block.values())):
            break
        block = new
        rounds.append(dict(block))
    a, b = (0, t1.initial), (1, t2.initial)
    if block[a] == block[b]:
        return Equivalent(len(set(block.values())))
    return _counterexample(ts, rounds, a, b)


def _counterexample(ts, rounds, a, b) -> CounterexamplePair:
    path = []
    while True:
        r = next(k for k, part in enumerate(rounds) if part[a] != part[b])
        if r == 0:
            return CounterexamplePair(a[1], b[1], tuple(path), "state contents differ")
        prev = rounds[r - 1]
        for x, y, flip in ((a, b, False), (b, a, True)):
            ex = ts[x[0]].succ(x[1])
            ey = ts[y[0]].succ(y[1])
            for e in ex:
                matches = [f for f in ey if f.label == e.label]
                if not any(prev[(y[0], f.dst)] == prev[(x[0], e.dst)] for f in matches):
                    if not matches:
                        who = "right" if not flip else "left"
                        return CounterexamplePair(a[1], b[1], tuple(path + [e.label]),
                                                  f"{who} side cannot match a {e.label!r} step")
                    nx, ny = (x[0], e.dst), (y[0], matches[0].dst)
                    a, b = (ny, nx) if flip else (nx, ny)
                    path.append(e.label)
                    break
            else:
                continue
            break
        else:
            return CounterexamplePair(a[1], b[1], tuple(path), "no distinguishing step found")


def isomorphic(t1: TransitionSystem, t2: TransitionSystem) -> bool:
    """Exact isomorphism of two systems over canonical states (value maps ignored)."""
    def shape(t):
        keys = [t.key(i) for i in range(len(t))]
        return (keys[t.initial], frozenset(keys),
                frozenset((keys[e.src], e.label, keys[e.dst]) for e in t.edges))
    return len(t1) == len(t2) and shape(t1) == shape(t2)


# --------------------------------------------------------------------------
# boundedness


@dataclass(frozen=True)
class Bounded:
    max_size: int
    truncated: bool = False

    def __bool__(self):
        return True


@dataclass(frozen=True)
class ViolationPath:
    states: tuple
    sizes: tuple
    labels: tuple
    bound: int

    def __bool__(self):
        return False


def monitor_boundedness(ts: TransitionSystem, b: int) -> Union[Bounded, ViolationPath]:
    """Check every state size against ``b``; a violation comes with a shortest path."""
    bad = [i for i in range(len(ts)) if ts.sizes[i] > b]
    if not bad:
        return Bounded(max(ts.sizes) if ts.sizes else 0, ts.truncated)
    dist = ts.distances()
    target = min((i for i in bad if i in dist), key=lambda i: (dist[i], i))
    path = ts.path_to(target)
    states = (ts.initial,) + tuple(e.dst for e in path)
    return ViolationPath(states, tuple(ts.sizes[i] for i in states), tuple(e.label for e in path), b)


# --------------------------------------------------------------------------
# export


def format_snapshot(s: Snapshot) -> str:
    parts = []
    for i in s.instances:
        vals = ",".join(f"{k}={v}" for k, v in i.values if v is not None)
        st = ",".join(sorted(i.open))
        ms = ",".join(sorted(i.achieved))
        parts.append(f"{i.type}:{i.id}[{vals}]{{open:{st};achieved:{ms}}}")
    return " ".join(parts)


def to_text(ts: TransitionSystem) -> str:
    lines = [f"# kind={ts.kind} states={len(ts)} edges={len(ts.edges)} truncated={str(ts.truncated).lower()}"]
    for i in range(len(ts)):
        mark = " *" if i in ts.frontier else ""
        lines.append(f"s{i} size={ts.sizes[i]} depth={ts.depth[i]}{mark} : {format_snapshot(ts.snapshots[i])}")
    for i in range(len(ts)):
        for e in ts.succ(i):
            lines.append(f"s{e.src} -[{e.label}]-> s{e.dst}")
    return "\n".join(lines) + "\n"


def to_dot(ts: TransitionSystem) -> str:
    lines = ["digraph ts {", "  rankdir=LR;", "  node [shape=box, fontsize=9];"]
    for i in range(len(ts)):
        label = format_snapshot(ts.snapshots[i]).replace('"', "'").replace(" ", "\\n")
        style = ", style=dashed" if i in ts.frontier else ""
        style += ", penwidth=2" if i == ts.initial else ""
        lines.append(f'  s{i} [label="s{i}\\n{label}"{style}];')
    for i in range(len(ts)):
        for e in ts.succ(i):
            lines.append(f'  s{e.src} -> s{e.dst} [label="{e.label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
