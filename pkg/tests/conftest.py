from pathlib import Path

import pytest

from gsmv import corpus_path
from gsmv.engine import compile_model
from gsmv.syntax import load_model

FIXTURES = Path(__file__).with_name("fixtures")


def fixture_path(name):
    return FIXTURES / name


@pytest.fixture(scope="session")
def order_model():
    return load_model(corpus_path("order"))


@pytest.fixture(scope="session")
def order_program(order_model):
    return compile_model(order_model)


@pytest.fixture(scope="session")
def nocreate_model():
    return load_model(corpus_path("order_nocreate"))


@pytest.fixture(scope="session")
def nocreate_program(nocreate_model):
    return compile_model(nocreate_model)


@pytest.fixture(scope="session")
def halting_program():
    return compile_model(load_model(corpus_path("turing_halting")))


@pytest.fixture(scope="session")
def looping_program():
    return compile_model(load_model(corpus_path("turing_looping")))


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, taken from the test reports."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" in props and rep.when == "call":
                lines.append((props["criterion"], outcome, props.get("detail", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for n, outcome, detail in sorted(lines):
            verdict = "PASS" if outcome == "passed" else "FAIL"
            terminalreporter.write_line(f"criterion {n}: {verdict}  {detail}")
