"""Command-line entry point: ``gsmv <subcommand> ...``.

Exit codes: 0 success (all properties true), 1 a property or bound check
failed, 2 invalid input or refused request.  ``GSMV_LOG`` sets the log
level (for example ``GSMV_LOG=debug``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .dcds import DcdsError, spec_to_json
from .engine import EngineError, compile_model, run_script
from .model import ModelError, has_creation_tasks
from .mucalc import PropertyError, check, format_formula, parse_property
from .pac import CycleError, explain, random_linear_extension
from .statespace import (
    AbstractionPolicy,
    build_dcds_ts,
    build_gsm_ts,
    format_snapshot,
    monitor_boundedness,
    to_dot,
    to_text,
)
from .syntax import load_model, model_to_json, parse_event_script
from .translate import ContainerConfig, TranslationError, mapping_report, translate

log = logging.getLogger("gsmv")

NAMED_PROPERTIES = {
    "receipt-before-pay":
        'mu Z. (achieved("receipt sent") & !achieved("Order paid")) | (!achieved("Order paid") & <-> Z)',
    "pay-reachable": 'mu Z. achieved("Order paid") | <-> Z',
    "receipt-after-pay":
        'nu Z. (achieved("receipt sent") -> achieved("Order paid")) & [-] Z',
    "halts": 'mu Z. achieved("Halt") | <-> Z',
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: Path
    script: Optional[Path] = None
    containers: Optional[dict] = None
    fresh: Optional[int] = None
    max_states: Optional[int] = None
    max_depth: Optional[int] = None
    seed: Optional[int] = None
    out: Optional[Path] = None
    props: list = field(default_factory=list)
    trace: bool = False
    dot: bool = False
    dcds: bool = False
    allow_bounded_depth: bool = False
    explore: bool = False
    bound: Optional[int] = None

    def __post_init__(self):
        for name in ("max_states", "max_depth", "fresh"):
            v = getattr(self, name)
            if v is not None and v < (0 if name == "fresh" else 1):
                raise UsageError(f"--{name.replace('_', '-')} must be positive")


def parse_containers(text: Optional[str]) -> Optional[dict]:
    """``"Order=1,Item=2"`` to a dict."""
    if not text:
        return None
    out = {}
    for part in text.split(","):
        name, sep, n = part.partition("=")
        if not sep or not n.strip().isdigit() or int(n) < 1:
            raise UsageError(f"bad container bound {part!r}; expected Type=N with N >= 1")
        out[name.strip()] = int(n)
    return out


def _load(cfg: RunConfig):
    model = load_model(cfg.model)
    if cfg.containers:
        names = {at.name for at in model.artifact_types}
        unknown = set(cfg.containers) - names
        if unknown:
            raise UsageError(f"containers for unknown artifact types: {sorted(unknown)}")
    return model, compile_model(model)


def _policy(cfg, model):
    return AbstractionPolicy(cfg.fresh) if cfg.fresh is not None else AbstractionPolicy.for_model(model)


def _write(path: Optional[Path], text: str, out):
    if path is None:
        out.write(text)
    else:
        Path(path).write_text(text)


# --------------------------------------------------------------------------
# subcommands


def cmd_parse(cfg, out) -> int:
    model, program = _load(cfg)
    types = ", ".join(at.name for at in model.artifact_types)
    out.write(f"model {model.name!r}: types {types}; {len(program.rules)} rules; "
              f"{len(model.initial_snapshot.instances)} initial instances\n")
    if cfg.out:
        Path(cfg.out).write_text(json.dumps(model_to_json(model), indent=2) + "\n")
    return 0


def cmd_explain(cfg, out) -> int:
    _, program = _load(cfg)
    out.write(explain(program.rules, program.order))
    return 0


def cmd_simulate(cfg, out) -> int:
    model, program = _load(cfg)
    if cfg.script is None:
        raise UsageError("simulate needs an event script")
    events = parse_event_script(Path(cfg.script).read_text())
    if cfg.seed is not None:
        rng = random.Random(cfg.seed)
        order = random_linear_extension([r.id for r in program.rules], program.order.edges, rng)
        program = type(program)(program.model, program.rules, type(program.order)(order, program.order.edges))
    steps = run_script(program, model.initial_snapshot, events, containers=cfg.containers)
    lines, traces = [], []
    for k, (snap, trace) in enumerate(steps, start=1):
        if cfg.trace:
            lines.append(trace.to_text())
        lines.append(f"after {k} ({trace.event}): {format_snapshot(snap)}")
        traces.append({"event": str(trace.event), "micro_steps": trace.to_json(),
                       "snapshot": format_snapshot(snap)})
    out.write("\n".join(lines) + "\n")
    if cfg.out:
        Path(cfg.out).write_text(json.dumps(traces, indent=2) + "\n")
    return 0


def cmd_translate(cfg, out) -> int:
    _, program = _load(cfg)
    spec, tmap = translate(program, ContainerConfig.of(cfg.containers))
    report = mapping_report(spec, tmap)
    out.write(report)
    if cfg.out:
        Path(cfg.out).write_text(json.dumps(spec_to_json(spec), indent=1) + "\n")
    return 0


def _build(cfg, model, program, dcds=False):
    policy = _policy(cfg, model)
    if dcds:
        spec, tmap = translate(program, ContainerConfig.of(cfg.containers))
        return build_dcds_ts(spec, tmap, policy, max_states=cfg.max_states, max_depth=cfg.max_depth)
    return build_gsm_ts(program, policy, max_states=cfg.max_states, max_depth=cfg.max_depth,
                        containers=cfg.containers)


def cmd_build_ts(cfg, out) -> int:
    model, program = _load(cfg)
    if not cfg.containers and has_creation_tasks(model) and cfg.max_states is None and cfg.max_depth is None:
        raise UsageError("model creates instances without container bounds; give --containers "
                         "or a --max-states/--max-depth budget")
    t0 = time.perf_counter()
    ts = _build(cfg, model, program, cfg.dcds)
    log.info("built %s system: %d states in %.2fs", ts.kind, len(ts), time.perf_counter() - t0)
    _write(cfg.out, to_dot(ts) if cfg.dot else to_text(ts), out)
    if cfg.out:
        out.write(f"{ts.kind}: {len(ts)} states, {len(ts.edges)} edges, "
                  f"truncated={str(ts.truncated).lower()}\n")
    return 0


def cmd_verify(cfg, out) -> int:
    model, program = _load(cfg)
    if not cfg.props:
        raise UsageError("verify needs at least one --prop")
    budget = cfg.max_states is not None or cfg.max_depth is not None
    if not cfg.containers and has_creation_tasks(model) and not budget:
        raise UsageError(
            "refusing to verify: the model creates artifact instances and no container bounds "
            "were given, so repeated requests may accumulate instances without limit and the "
            "state space need not be finite. Supply --containers Type=N,... to bound them, "
            "or an exploration budget (--max-states/--max-depth).")
    formulas = []
    for p in cfg.props:
        text = NAMED_PROPERTIES.get(p, p)
        formulas.append((p, parse_property(text)))
    ts = _build(cfg, model, program)
    if ts.truncated and not cfg.allow_bounded_depth:
        raise UsageError(f"exploration stopped at the budget ({len(ts)} states); raise the budget "
                         "or pass --allow-bounded-depth")
    all_true = True
    for name, f in formulas:
        r = check(ts, f, allow_truncated=cfg.allow_bounded_depth)
        all_true &= r.holds
        out.write(f"{name}: {'TRUE' if r.holds else 'FALSE'}\n")
        if name != format_formula(f):
            out.write(f"  formula: {format_formula(f)}\n")
        if r.witness is not None:
            out.write(f"  {r.witness_kind}: {' ; '.join(e.label for e in r.witness) or '(initial state)'}\n")
    if ts.truncated:
        out.write(f"note: bounded exploration ({len(ts)} states); verdicts hold for the explored part only\n")
    return 0 if all_true else 1


def cmd_check_bounded(cfg, out) -> int:
    model, program = _load(cfg)
    if not has_creation_tasks(model):
        out.write("bounded: the model has no create-instance tasks, so every stable state "
                  f"has the initial size {model.initial_snapshot.size()}\n")
        return 0
    if cfg.containers:
        out.write(f"bounded: instances are limited by containers {cfg.containers}\n")
        return 0
    out.write("unknown: the model creates instances and no container bounds were given\n")
    if not cfg.explore:
        return 1
    bound = cfg.bound if cfg.bound is not None else model.initial_snapshot.size() + 3
    ts = build_gsm_ts(program, _policy(cfg, model), max_states=cfg.max_states or 200, order="dfs",
                      stop=lambda s: s.size() > bound)
    r = monitor_boundedness(ts, bound)
    if r:
        out.write(f"no state larger than {bound} within {len(ts)} explored states\n")
        return 1
    out.write(f"violation of bound {bound}:\n")
    for label, size in zip(("start",) + r.labels, r.sizes):
        out.write(f"  {label:<20} size {size}\n")
    return 1


COMMANDS = {
    "parse": cmd_parse,
    "explain": cmd_explain,
    "simulate": cmd_simulate,
    "translate": cmd_translate,
    "build-ts": cmd_build_ts,
    "verify": cmd_verify,
    "check-bounded": cmd_check_bounded,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gsmv", description="GSM artifact models: run, translate, verify.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, containers=True):
        sp.add_argument("model", type=Path, help="model file (.gsm or .json)")
        if containers:
            sp.add_argument("--containers", help="instance bounds, e.g. Order=1,Item=2")

    def budgets(sp):
        sp.add_argument("--fresh", type=int, help="fresh payload representatives (default: max payload slots)")
        sp.add_argument("--max-states", type=int)
        sp.add_argument("--max-depth", type=int)

    sp = sub.add_parser("parse", help="parse and validate a model")
    common(sp, containers=False)
    sp.add_argument("--out", type=Path, help="write the model as JSON")
    sp = sub.add_parser("explain", help="print rules and their firing order")
    common(sp, containers=False)
    sp = sub.add_parser("simulate", help="run an event script")
    common(sp)
    sp.add_argument("script", type=Path)
    sp.add_argument("--seed", type=int, help="fire rules in a random valid order drawn with this seed")
    sp.add_argument("--trace", action="store_true", help="print micro-steps")
    sp.add_argument("--out", type=Path, help="write traces as JSON")
    sp = sub.add_parser("translate", help="translate to a data-centric dynamic system")
    common(sp)
    sp.add_argument("--out", type=Path, help="write the system as JSON")
    sp = sub.add_parser("build-ts", help="explore the transition system")
    common(sp)
    budgets(sp)
    sp.add_argument("--dcds", action="store_true", help="explore the translated system instead")
    sp.add_argument("--dot", action="store_true", help="emit Graphviz dot")
    sp.add_argument("--out", type=Path)
    sp = sub.add_parser("verify", help="check properties")
    common(sp)
    budgets(sp)
    sp.add_argument("--prop", action="append", default=[],
                    help=f"formula or one of: {', '.join(NAMED_PROPERTIES)}")
    sp.add_argument("--allow-bounded-depth", action="store_true",
                    help="accept a truncated exploration")
    sp = sub.add_parser("check-bounded", help="decide or probe state-boundedness")
    common(sp)
    budgets(sp)
    sp.add_argument("--explore", action="store_true", help="search for a bound violation")
    sp.add_argument("--bound", type=int)
    return p


def _config(ns) -> RunConfig:
    return RunConfig(
        command=ns.command, model=ns.model, script=getattr(ns, "script", None),
        containers=parse_containers(getattr(ns, "containers", None)),
        fresh=getattr(ns, "fresh", None), max_states=getattr(ns, "max_states", None),
        max_depth=getattr(ns, "max_depth", None), seed=getattr(ns, "seed", None),
        out=getattr(ns, "out", None), props=getattr(ns, "prop", []),
        trace=getattr(ns, "trace", False), dot=getattr(ns, "dot", False),
        dcds=getattr(ns, "dcds", False), allow_bounded_depth=getattr(ns, "allow_bounded_depth", False),
        explore=getattr(ns, "explore", False), bound=getattr(ns, "bound", None))


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    level = os.environ.get("GSMV_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    ns = build_parser().parse_args(argv)
    try:
        cfg = _config(ns)
        return COMMANDS[cfg.command](cfg, out)
    except (ModelError, CycleError, UsageError, PropertyError, EngineError, TranslationError,
            DcdsError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
