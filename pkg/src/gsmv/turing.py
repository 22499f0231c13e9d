"""Encoding of a deterministic single-tape Turing machine as a GSM model.

The artifact keeps the control state in ``curState`` and the head in
``curCell``; the tape is a doubly linked list of nested ``Cell`` instances
grown on demand.  One transition takes several B-steps: a ``tick`` opens
the Transition stage, the matching state-update substage dispatches its
task, and its return triggers the Right (or Left) shift stage, which
first extends the tape when the head sits on the last (first) cell.

A direct interpreter is included as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import (
    CREATE,
    PARENT,
    REF,
    UPDATE,
    And,
    ArtifactType,
    Attr,
    AttributeDecl,
    Cmp,
    Const,
    EventInstance,
    EventRef,
    EventType,
    GsmModel,
    IsNull,
    Milestone,
    ModelError,
    New,
    Not,
    Sentry,
    Snapshot,
    Stage,
    StatusAtom,
    Task,
    blank_instance,
)
from .validate import validate

BLANK = "b"
SYMBOLS = ("0", "1", BLANK)
TICK = "tick"


@dataclass(frozen=True)
class TuringMachine:
    """``delta`` holds ``(state, read, next_state, write, move)`` with move in L/R."""

    states: tuple
    q0: str
    qf: str
    delta: tuple

    def check(self):
        if self.q0 not in self.states or self.qf not in self.states:
            raise ModelError("initial and final states must be declared")
        seen = set()
        for q, v, q2, w, d in self.delta:
            if q not in self.states or q2 not in self.states:
                raise ModelError(f"transition uses undeclared state: {(q, v, q2, w, d)}")
            if v not in SYMBOLS or w not in SYMBOLS:
                raise ModelError(f"transition uses a symbol outside {SYMBOLS}")
            if d not in ("L", "R"):
                raise ModelError(f"move must be L or R, got {d!r}")
            if q == self.qf:
                raise ModelError("no transition may leave the final state")
            if (q, v) in seen:
                raise ModelError(f"non-deterministic transition relation at ({q!r}, {v!r})")
            seen.add((q, v))
        return self

    def step(self, q, v) -> Optional[tuple]:
        for t in self.delta:
            if t[0] == q and t[1] == v:
                return t
        return None


# --------------------------------------------------------------------------
# direct interpreter (oracle)


@dataclass(frozen=True)
class TmRun:
    halted: bool
    steps: int
    state: str
    tape: tuple  # cell values from the leftmost visited cell
    head: int  # index of the head into ``tape``


def run_tm(tm: TuringMachine, max_steps: int) -> TmRun:
    """Run from a single blank cell; stops at ``qf``, when stuck, or at the limit."""
    tm.check()
    tape = [BLANK]
    head, q, n = 0, tm.q0, 0
    while q != tm.qf and n < max_steps:
        t = tm.step(q, tape[head])
        if t is None:
            break
        _, _, q, w, d = t
        tape[head] = w
        if d == "R":
            head += 1
            if head == len(tape):
                tape.append(BLANK)
        else:
            if head == 0:
                tape.insert(0, BLANK)
            else:
                head -= 1
        n += 1
    return TmRun(q == tm.qf, n, q, tuple(tape), head)


# --------------------------------------------------------------------------
# GSM encoding


def _c(v):
    return Const(v)


def _shift_stage(side):
    """Composite Right/Left stage with its extension and shift substages."""
    nxt, back = ("next", "prev") if side == "R" else ("prev", "next")
    word = "Right" if side == "R" else "Left"
    ext = Stage(
        f"Extend {word}",
        guards=(Sentry(EventRef("internal", word, "+"), IsNull(Attr(nxt, "curCell"))),),
        milestones=(Milestone(f"extended {side}", (Sentry(EventRef("done", f"ext{side}")),)),),
        task=f"ext{side}",
    )
    shift = Stage(
        f"Shift {word}",
        guards=(
            Sentry(EventRef("internal", word, "+"), IsNull(Attr(nxt, "curCell"), negated=True)),
            Sentry(EventRef("internal", f"extended {side}", "+")),
        ),
        milestones=(Milestone(f"shifted {side}", (Sentry(EventRef("done", f"shift{side}")),)),),
        task=f"shift{side}",
    )
    tasks = (
        Task(f"ext{side}", CREATE, "Cell",
             init=(("value", _c(BLANK)), (back, Attr("curCell"))),
             assign=((Attr(nxt, "curCell"), New()),)),
        Task(f"shift{side}", UPDATE, assign=((Attr("curCell"), Attr(nxt, "curCell")),)),
    )
    return ext, shift, tasks


def encode_turing_machine(tm: TuringMachine, name: Optional[str] = None) -> GsmModel:
    """Build the GSM model simulating ``tm``; rejects non-deterministic ``delta``."""
    tm.check()
    tasks = [
        Task("init", CREATE, "Cell", init=(("value", _c(BLANK)),),
             assign=((Attr("curCell"), New()), (Attr("curState"), _c(tm.q0)))),
    ]
    init = Stage(
        "Init",
        guards=(Sentry(EventRef("external", TICK), IsNull(Attr("curCell"))),),
        milestones=(Milestone("initialized", (Sentry(EventRef("done", "init")),)),),
        task="init",
    )

    updates, done_by_side = [], {"R": [], "L": []}
    for i, (q, v, q2, w, d) in enumerate(tm.delta, start=1):
        label = f"{d}{i}"
        tname = f"upd{label}"
        cond = And((Cmp("=", Attr("curState"), _c(q)), Cmp("=", Attr("value", "curCell"), _c(v))))
        updates.append(Stage(
            f"{label} update",
            guards=(Sentry(EventRef("internal", "Transition", "+"), cond),),
            milestones=(Milestone(f"{label} done", (Sentry(EventRef("done", tname)),)),),
            task=tname,
        ))
        tasks.append(Task(tname, UPDATE, assign=(
            (Attr("curState"), _c(q2)), (Attr("value", "curCell"), _c(w)))))
        done_by_side[d].append(f"{label} done")

    shifts, finished = [], []
    for side, word in (("R", "Right"), ("L", "Left")):
        if not done_by_side[side]:
            continue
        ext, shift, extra = _shift_stage(side)
        tasks.extend(extra)
        shifts.append(Stage(
            word,
            guards=tuple(Sentry(EventRef("internal", m, "+")) for m in done_by_side[side]),
            milestones=(Milestone(f"{word} done", (Sentry(EventRef("internal", f"shifted {side}", "+")),)),),
            substages=(ext, shift),
        ))
        finished.append(Sentry(EventRef("internal", f"{word} done", "+")))

    transition = Stage(
        "Transition",
        guards=(Sentry(EventRef("external", TICK), And((
            IsNull(Attr("curCell"), negated=True), Not(StatusAtom("achieved", "Halt"))))),),
        milestones=tuple(
            [Milestone("Transition done", tuple(finished))] if finished else []
        ) + (Milestone("Halt", tuple(
            Sentry(EventRef("internal", n, "+"), Cmp("=", Attr("curState"), _c(tm.qf)))
            for n in ("Transition", "Transition done") if finished or n == "Transition")),),
        substages=tuple(updates) + tuple(shifts),
    )

    machine = ArtifactType(
        "Machine",
        attributes=(AttributeDecl("curState"), AttributeDecl("curCell", REF, "Cell")),
        stages=(init, transition),
        tasks=tuple(tasks),
    )
    cell = ArtifactType(
        "Cell",
        attributes=(AttributeDecl(PARENT, REF, "Machine"), AttributeDecl("value"),
                    AttributeDecl("prev", REF, "Cell"), AttributeDecl("next", REF, "Cell")),
        parent="Machine",
    )
    s0 = Snapshot((blank_instance(machine, "m1"),))
    model = GsmModel(name or "turing machine", (machine, cell),
                     (EventType(TICK, "Machine"),), s0)
    return validate(model)


# --------------------------------------------------------------------------
# driving the encoded machine


def pending_task(model: GsmModel, inst) -> Optional[str]:
    """Task whose atomic stage is open (at most one in the encoding)."""
    at = model.type(inst.type)
    for s in at.all_stages:
        if s.task is not None and s.name in inst.open:
            return s.task
    return None


def next_event(model: GsmModel, snap: Snapshot) -> EventInstance:
    """The deterministic driver: answer the pending call, otherwise tick."""
    inst = snap.get("m1")
    task = pending_task(model, inst)
    return EventInstance(task or TICK, "m1")


def read_tape(snap: Snapshot) -> tuple:
    """``(values from the leftmost cell, head index)`` of an encoded tape."""
    m = snap.get("m1")
    cells = {c.id: c for c in snap.of_type("Cell")}
    if not cells:
        return (), None
    first = next(c for c in cells.values() if c.get("prev") is None)
    out, cur, head = [], first, None
    while cur is not None:
        if cur.id == m.get("curCell"):
            head = len(out)
        out.append(cur.get("value"))
        cur = cells.get(cur.get("next"))
    return tuple(out), head


def simulate_tm(program, max_bsteps: int):
    """Drive the encoded machine; returns ``(snapshots, halted)``."""
    from .engine import b_step

    snap = program.model.initial_snapshot
    seen = [snap]
    for _ in range(max_bsteps):
        if "Halt" in snap.get("m1").achieved:
            return seen, True
        snap, _ = b_step(program, snap, next_event(program.model, snap))
        seen.append(snap)
    return seen, "Halt" in snap.get("m1").achieved


HALTING_2STATE = TuringMachine(("q0", "qf"), "q0", "qf", (("q0", BLANK, "qf", "1", "R"),))
LOOPING_RIGHT = TuringMachine(("q0", "qf"), "q0", "qf", (("q0", BLANK, "q0", "1", "R"),))
