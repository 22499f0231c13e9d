"""Without container bounds, item requests make the order grow forever.

    python demos/unbounded_orders.py
"""

from gsmv import corpus_path
from gsmv.engine import compile_model
from gsmv.statespace import build_gsm_ts, monitor_boundedness
from gsmv.syntax import load_model


def main():
    program = compile_model(load_model(corpus_path("order")))
    bound = program.model.initial_snapshot.size() + 3
    ts = build_gsm_ts(program, max_states=200, order="dfs", stop=lambda s: s.size() > bound)
    res = monitor_boundedness(ts, bound)
    print(f"bound {bound} instances; {len(ts)} states explored")
    for label, size in zip(("start",) + res.labels, res.sizes):
        print(f"  {label:<12} {'#' * size} {size}")
    capped = build_gsm_ts(program, containers={"Order": 1, "Item": 3})
    print(f"with containers Order=1,Item=3: {len(capped)} states, largest has {max(capped.sizes)} instances")


if __name__ == "__main__":
    main()
