import io
import json
import subprocess
import sys

import pytest

from gsmv import corpus_path
from gsmv.cli import RunConfig, UsageError, main, parse_containers

from conftest import FIXTURES

ORDER = str(corpus_path("order"))
SCRIPT = str(FIXTURES.parent / "golden" / "order_happy.events")


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_parse_and_explain():
    code, text = run("parse", ORDER)
    assert code == 0 and "model 'order management'" in text and "15 rules" in text
    code, text = run("explain", ORDER)
    assert code == 0 and "Order/T1/Pay order#0" in text


def test_parse_writes_json(tmp_path):
    dest = tmp_path / "m.json"
    assert run("parse", ORDER, "--out", str(dest))[0] == 0
    assert run("parse", str(dest))[0] == 0
    assert json.loads(dest.read_text())["model"] == "order management"


def test_invalid_model_exits_2(capsys):
    code, _ = run("parse", str(FIXTURES / "unknown_event.gsm"))
    assert code == 2 and capsys.readouterr().err.startswith("error: ")


def test_missing_file_exits_2(capsys):
    assert run("parse", "no/such/file.gsm")[0] == 2
    assert "error:" in capsys.readouterr().err


def test_simulate_and_seeded_determinism(tmp_path):
    code, plain = run("simulate", ORDER, SCRIPT)
    assert code == 0 and plain.count("after ") == 5
    assert "receipt sent" in plain.splitlines()[-1]
    a = run("simulate", ORDER, SCRIPT, "--seed", "7", "--trace")[1]
    b = run("simulate", ORDER, SCRIPT, "--seed", "7", "--trace")[1]
    assert a == b
    # any valid firing order gives the same snapshots
    assert [l for l in a.splitlines() if l.startswith("after")] == plain.splitlines()
    dest = tmp_path / "trace.json"
    run("simulate", ORDER, SCRIPT, "--out", str(dest))
    assert len(json.loads(dest.read_text())) == 5


def test_translate_report(tmp_path):
    dest = tmp_path / "d.json"
    code, text = run("translate", ORDER, "--containers", "Order=1,Item=2", "--out", str(dest))
    assert code == 0 and "exec arity: 16" in text and "N_max = 3" in text
    assert json.loads(dest.read_text())


def test_build_ts_is_deterministic(tmp_path):
    a = run("build-ts", ORDER, "--containers", "Order=1,Item=1")[1]
    b = run("build-ts", ORDER, "--containers", "Order=1,Item=1")[1]
    assert a == b and a.startswith("# kind=gsm")
    dot = run("build-ts", ORDER, "--containers", "Order=1,Item=1", "--dot")[1]
    assert dot.startswith("digraph")
    d = run("build-ts", ORDER, "--containers", "Order=1,Item=1", "--dcds")[1]
    assert d.splitlines()[0].split()[2] == a.splitlines()[0].split()[2]


def test_build_ts_refuses_unbounded(capsys):
    assert run("build-ts", ORDER)[0] == 2
    assert "container" in capsys.readouterr().err


def test_verify_verdicts_and_exit_codes():
    code, text = run("verify", ORDER, "--containers", "Order=1,Item=1", "--prop", "pay-reachable")
    assert code == 0 and "pay-reachable: TRUE" in text and "witness: itemRequest" in text
    code, text = run("verify", ORDER, "--containers", "Order=1,Item=1",
                     "--prop", "receipt-before-pay", "--prop", "receipt-after-pay")
    assert code == 1
    assert "receipt-before-pay: FALSE" in text and "receipt-after-pay: TRUE" in text


def test_verify_refuses_without_containers(capsys):
    assert run("verify", ORDER, "--prop", "pay-reachable")[0] == 2
    assert "refusing to verify" in capsys.readouterr().err


def test_verify_truncated_needs_flag(capsys):
    assert run("verify", ORDER, "--max-states", "10", "--prop", "pay-reachable")[0] == 2
    code, text = run("verify", ORDER, "--max-states", "10", "--prop", "pay-reachable",
                     "--allow-bounded-depth")
    assert "bounded exploration" in text


def test_verify_bad_formula(capsys):
    assert run("verify", ORDER, "--containers", "Order=1,Item=1", "--prop", "mu Z. !Z")[0] == 2
    assert "negatively" in capsys.readouterr().err


def test_check_bounded():
    assert run("check-bounded", str(corpus_path("order_nocreate")))[0] == 0
    assert run("check-bounded", ORDER, "--containers", "Order=1,Item=2")[0] == 0
    code, text = run("check-bounded", ORDER)
    assert code == 1 and text.startswith("unknown")
    code, text = run("check-bounded", ORDER, "--explore")
    assert code == 1 and "violation of bound 4" in text


def test_halting_machine_from_cli():
    code, text = run("verify", str(corpus_path("turing_halting")), "--max-states", "500", "--prop", "halts")
    assert code == 0 and "halts: TRUE" in text


def test_containers_parsing():
    assert parse_containers("Order=1, Item=2") == {"Order": 1, "Item": 2}
    for bad in ("Order", "Order=0", "Order=x"):
        with pytest.raises(UsageError):
            parse_containers(bad)
    with pytest.raises(UsageError):
        RunConfig("build-ts", ORDER, max_states=0)
    assert run("translate", ORDER, "--containers", "Basket=1")[0] == 2


def test_argparse_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "gsmv", "parse", ORDER], capture_output=True, text=True)
    assert res.returncode == 0 and "order management" in res.stdout
