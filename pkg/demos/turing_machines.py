"""Encode two small Turing machines as artifact models.

The halting machine reaches its Halt milestone; the looping one keeps
growing its tape, so exploration hits the budget and the size monitor
reports a path of increasing states.

    python demos/turing_machines.py
"""

from gsmv.engine import compile_model
from gsmv.mucalc import check
from gsmv.statespace import build_gsm_ts, monitor_boundedness
from gsmv.turing import HALTING_2STATE, LOOPING_RIGHT, encode_turing_machine, read_tape, run_tm, simulate_tm


def main():
    for name, tm in (("halting", HALTING_2STATE), ("looping", LOOPING_RIGHT)):
        print(f"== {name}: delta = {tm.delta}")
        print("  interpreter after 5 steps:", run_tm(tm, 5))
        program = compile_model(encode_turing_machine(tm, name))
        snaps, halted = simulate_tm(program, 20)
        print(f"  encoded run: {len(snaps) - 1} B-steps, halted={halted}, tape {read_tape(snaps[-1])}")
        ts = build_gsm_ts(program, max_states=200)
        if ts.truncated:
            bound = ts.sizes[ts.initial] + 6
            mon = monitor_boundedness(ts, bound)
            print(f"  {len(ts)} states explored (budget reached); sizes along the path: {list(mon.sizes)}")
        else:
            r = check(ts, 'mu Z. achieved("Halt") | <-> Z')
            print(f"  halts: {r.holds} via {' ; '.join(e.label for e in r.witness)}")


if __name__ == "__main__":
    main()
