"""Run the order model, translate it, and verify two properties.

    python demos/order_walkthrough.py
"""

from gsmv import CORPUS, corpus_path, run_script
from gsmv.engine import compile_model
from gsmv.mucalc import check
from gsmv.statespace import build_dcds_ts, build_gsm_ts, check_bisimulation, format_snapshot
from gsmv.syntax import load_model, parse_event_script
from gsmv.translate import mapping_report, translate

BOUNDS = {"Order": 1, "Item": 2}


def main():
    model = load_model(corpus_path("order"))
    program = compile_model(model)

    print("== a happy-path run")
    events = parse_event_script((CORPUS / "order_happy.events").read_text())
    for snap, trace in run_script(program, model.initial_snapshot, events):
        print(f"{str(trace.event):<45} {format_snapshot(snap)}")

    print("\n== translation with containers", BOUNDS)
    spec, tmap = translate(program, BOUNDS)
    print(mapping_report(spec, tmap).split("\n\n")[0])

    print("\n== state spaces")
    g = build_gsm_ts(program, containers=BOUNDS)
    d = build_dcds_ts(spec, tmap)
    print(f"engine: {len(g)} states, translated system: {len(d)} unblocked states")
    print("bisimulation:", check_bisimulation(g, d))

    print("\n== properties")
    props = {
        "receipt before payment": 'mu Z. (achieved("receipt sent") & !achieved("Order paid")) '
                                  '| (!achieved("Order paid") & <-> Z)',
        "payment reachable": 'mu Z. achieved("Order paid") | <-> Z',
    }
    for name, text in props.items():
        r = check(g, text)
        path = " ; ".join(e.label for e in r.witness or ())
        print(f"{name}: {r.holds}" + (f"  [{path}]" if path else ""))


if __name__ == "__main__":
    main()
