"""Domain types for GSM artifact models.

A model is a set of artifact types (information model + lifecycle), the
one-way event types the environment may send, and an initial snapshot.
Everything here is immutable; snapshots are rebuilt rather than mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional, Union

Value = Optional[str]

SCALAR = "scalar"
REF = "ref"

ONE_WAY = "one-way"
SERVICE_RETURN = "service-call-return"

UPDATE = "update-attributes"
CREATE = "create-artifact-instance"
DELETE = "delete-artifact-instance"
TASK_KINDS = (UPDATE, CREATE, DELETE)

PARENT = "parent"


class ModelError(Exception):
    """A model violates a structural invariant."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)


class ParseError(ModelError):
    pass


# --------------------------------------------------------------------------
# terms and conditions


@dataclass(frozen=True)
class Attr:
    """Attribute of the owning instance (``ref`` is None), of the child bound
    by an enclosing ``exists`` (``ref == "it"``), or of the child an id-ref
    attribute points to (``ref`` names that attribute)."""

    name: str
    ref: Optional[str] = None


@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class Param:
    """Payload slot of a service-call return (``$name``)."""

    name: str


@dataclass(frozen=True)
class New:
    """Identifier of the instance created by a create task."""


Term = Union[Attr, Const, Param, New]
NULL = Const(None)


@dataclass(frozen=True)
class TrueCond:
    pass


@dataclass(frozen=True)
class Cmp:
    op: str  # "=" or "!="
    left: Term
    right: Term


@dataclass(frozen=True)
class IsNull:
    term: Term
    negated: bool = False


@dataclass(frozen=True)
class StatusAtom:
    kind: str  # "open" | "achieved"
    name: str


@dataclass(frozen=True)
class ChildExists:
    type: str
    where: Optional["Condition"] = None


@dataclass(frozen=True)
class Not:
    arg: "Condition"


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


Condition = Union[TrueCond, Cmp, IsNull, StatusAtom, ChildExists, Not, And, Or]


def condition_terms(cond) -> Iterator[Term]:
    if isinstance(cond, Cmp):
        yield cond.left
        yield cond.right
    elif isinstance(cond, IsNull):
        yield cond.term
    elif isinstance(cond, ChildExists):
        if cond.where is not None:
            yield from condition_terms(cond.where)
    elif isinstance(cond, Not):
        yield from condition_terms(cond.arg)
    elif isinstance(cond, (And, Or)):
        for a in cond.args:
            yield from condition_terms(a)


def condition_status_reads(cond) -> Iterator[str]:
    if isinstance(cond, StatusAtom):
        yield cond.name
    elif isinstance(cond, ChildExists):
        if cond.where is not None:
            yield from condition_status_reads(cond.where)
    elif isinstance(cond, Not):
        yield from condition_status_reads(cond.arg)
    elif isinstance(cond, (And, Or)):
        for a in cond.args:
            yield from condition_status_reads(a)


def condition_status_polarity(cond, positive=True) -> Iterator[tuple]:
    """Yield ``(name, value)``: status values that can make ``cond`` true."""
    if isinstance(cond, StatusAtom):
        yield (cond.name, positive)
    elif isinstance(cond, ChildExists):
        if cond.where is not None:
            yield from condition_status_polarity(cond.where, positive)
    elif isinstance(cond, Not):
        yield from condition_status_polarity(cond.arg, not positive)
    elif isinstance(cond, (And, Or)):
        for a in cond.args:
            yield from condition_status_polarity(a, positive)


def condition_children(cond) -> Iterator[str]:
    if isinstance(cond, ChildExists):
        yield cond.type
        if cond.where is not None:
            yield from condition_children(cond.where)
    elif isinstance(cond, Not):
        yield from condition_children(cond.arg)
    elif isinstance(cond, (And, Or)):
        for a in cond.args:
            yield from condition_children(a)


# --------------------------------------------------------------------------
# lifecycle


@dataclass(frozen=True)
class EventRef:
    """What a sentry listens to.

    kind is ``external`` (one-way event type), ``done`` (return of a task),
    or ``internal`` (``sign`` is "+" or "-", ``name`` a stage or milestone).
    """

    kind: str
    name: str
    sign: str = ""


@dataclass(frozen=True)
class Sentry:
    event: Optional[EventRef] = None
    condition: Optional[Condition] = None


@dataclass(frozen=True)
class Milestone:
    name: str
    achieving: tuple  # of Sentry, nonempty
    invalidating: tuple = ()


@dataclass(frozen=True)
class Task:
    name: str
    kind: str
    target_type: Optional[str] = None
    outputs: tuple = ()  # payload slots filled by the service-call return
    inputs: tuple = ()  # terms sent with the service call
    init: tuple = ()  # (child attribute, source term) for create
    assign: tuple = ()  # (target Attr, source term), applied on return
    victim: Optional[Term] = None  # id-ref term for delete


@dataclass(frozen=True)
class Stage:
    name: str
    guards: tuple  # of Sentry, nonempty
    milestones: tuple = ()  # of Milestone
    substages: tuple = ()  # of Stage
    task: Optional[str] = None

    @property
    def atomic(self) -> bool:
        return not self.substages


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    sort: str = SCALAR
    ref_type: Optional[str] = None


@dataclass(frozen=True)
class ArtifactType:
    name: str
    attributes: tuple = ()
    stages: tuple = ()
    tasks: tuple = ()
    parent: Optional[str] = None  # set for nested (child) types

    def walk_stages(self) -> Iterator[tuple]:
        """Yield ``(stage, parent_stage_or_None, depth)`` in pre-order."""

        def rec(stages, parent, depth):
            for s in stages:
                yield s, parent, depth
                yield from rec(s.substages, s, depth + 1)

        yield from rec(self.stages, None, 0)

    @property
    def all_stages(self) -> tuple:
        return tuple(s for s, _, _ in self.walk_stages())

    @property
    def milestones(self) -> tuple:
        return tuple(m for s in self.all_stages for m in s.milestones)

    def stage_names(self) -> tuple:
        return tuple(s.name for s in self.all_stages)

    def milestone_names(self) -> tuple:
        return tuple(m.name for m in self.milestones)

    def attribute_names(self) -> tuple:
        return tuple(a.name for a in self.attributes)

    def attribute(self, name) -> Optional[AttributeDecl]:
        for a in self.attributes:
            if a.name == name:
                return a
        return None

    def task(self, name) -> Optional[Task]:
        for t in self.tasks:
            if t.name == name:
                return t
        return None

    def stage_of_task(self, task_name) -> Optional[Stage]:
        for s in self.all_stages:
            if s.task == task_name:
                return s
        return None

    def stage_of_milestone(self, name) -> Optional[Stage]:
        for s in self.all_stages:
            if any(m.name == name for m in s.milestones):
                return s
        return None


@dataclass(frozen=True)
class EventType:
    name: str
    target: str
    payload: tuple = ()
    kind: str = ONE_WAY


@dataclass(frozen=True)
class EventInstance:
    """An incoming or outgoing event.

    For service-call returns ``type`` is the task name and ``new_id`` carries
    the identifier chosen for an instance created by the return.
    """

    type: str
    target: str
    payload: tuple = ()  # (name, value) pairs
    new_id: Optional[str] = None

    def payload_dict(self) -> dict:
        return dict(self.payload)

    def __str__(self):
        body = ",".join(f"{k}={_fmt_value(v)}" for k, v in self.payload)
        extra = f" new={self.new_id}" if self.new_id is not None else ""
        return f"{self.type} target={self.target} {{{body}}}{extra}"


def _fmt_value(v):
    return "null" if v is None else v


# --------------------------------------------------------------------------
# snapshots


@dataclass(frozen=True)
class InstanceState:
    id: str
    type: str
    values: tuple = ()  # (attribute, value) in declaration order
    open: frozenset = frozenset()
    achieved: frozenset = frozenset()

    def get(self, attr) -> Value:
        for k, v in self.values:
            if k == attr:
                return v
        return None

    def with_values(self, updates: dict) -> "InstanceState":
        if not updates:
            return self
        return replace(self, values=tuple((k, updates.get(k, v)) for k, v in self.values))


@dataclass(frozen=True)
class Snapshot:
    instances: tuple = ()  # sorted by id
    _index: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        inst = tuple(sorted(self.instances, key=lambda i: i.id))
        object.__setattr__(self, "instances", inst)
        object.__setattr__(self, "_index", {i.id: i for i in inst})

    def get(self, iid) -> Optional[InstanceState]:
        return self._index.get(iid)

    def __contains__(self, iid):
        return iid in self._index

    def children(self, parent_id, type_name=None) -> list:
        return [
            i
            for i in self.instances
            if i.get(PARENT) == parent_id and (type_name is None or i.type == type_name)
        ]

    def of_type(self, type_name) -> list:
        return [i for i in self.instances if i.type == type_name]

    def replace_instance(self, inst: InstanceState) -> "Snapshot":
        return Snapshot(tuple(inst if i.id == inst.id else i for i in self.instances))

    def add_instance(self, inst: InstanceState) -> "Snapshot":
        return Snapshot(self.instances + (inst,))

    def remove_instance(self, iid) -> "Snapshot":
        return Snapshot(tuple(i for i in self.instances if i.id != iid))

    def size(self) -> int:
        return len(self.instances)


# --------------------------------------------------------------------------
# the model


@dataclass(frozen=True)
class GsmModel:
    name: str
    artifact_types: tuple
    event_types: tuple = ()
    initial_snapshot: Snapshot = field(default_factory=Snapshot)

    def type(self, name) -> ArtifactType:
        for t in self.artifact_types:
            if t.name == name:
                return t
        raise KeyError(name)

    def has_type(self, name) -> bool:
        return any(t.name == name for t in self.artifact_types)

    def event_type(self, name) -> Optional[EventType]:
        for e in self.event_types:
            if e.name == name:
                return e
        return None

    def child_types(self, parent) -> tuple:
        return tuple(t for t in self.artifact_types if t.parent == parent)

    def all_event_types(self) -> tuple:
        """One-way event types plus one service-call-return type per task."""
        out = list(self.event_types)
        for t in self.artifact_types:
            for task in t.tasks:
                out.append(EventType(task.name, t.name, task.outputs, SERVICE_RETURN))
        return tuple(out)

    def constants(self) -> frozenset:
        """Non-null constants mentioned anywhere in the lifecycle."""
        found = set()

        def term(t):
            if isinstance(t, Const) and t.value is not None:
                found.add(t.value)

        def sentry(s):
            if s.condition is not None:
                for t in condition_terms(s.condition):
                    term(t)

        for at in self.artifact_types:
            for s in at.all_stages:
                for g in s.guards:
                    sentry(g)
                for m in s.milestones:
                    for x in m.achieving + m.invalidating:
                        sentry(x)
            for task in at.tasks:
                for t in task.inputs:
                    term(t)
                for _, src in task.init + task.assign:
                    term(src)
        return frozenset(found)


def has_creation_tasks(m: GsmModel) -> bool:
    """True iff some task creates an artifact instance (nested items count)."""
    return any(task.kind == CREATE for t in m.artifact_types for task in t.tasks)


def blank_instance(at: ArtifactType, iid: str, values: Optional[dict] = None) -> InstanceState:
    values = values or {}
    return InstanceState(
        id=iid,
        type=at.name,
        values=tuple((a.name, values.get(a.name)) for a in at.attributes),
    )


def iter_sentries(at: ArtifactType) -> Iterable[Sentry]:
    for s in at.all_stages:
        yield from s.guards
        for m in s.milestones:
            yield from m.achieving
            yield from m.invalidating
