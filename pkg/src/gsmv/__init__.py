"""Guard-Stage-Milestone artifact models: execution, translation to
data-centric dynamic systems, and explicit-state verification."""

from pathlib import Path

from .engine import b_step, compile_model, run_script
from .model import EventInstance, GsmModel, Snapshot
from .syntax import load_model, parse_model

__version__ = "0.1.0"

CORPUS = Path(__file__).with_name("corpus")


def corpus_path(name: str) -> Path:
    """Path of a bundled model, e.g. ``corpus_path("order")``."""
    return CORPUS / f"{name}.gsm"


__all__ = ["CORPUS", "EventInstance", "GsmModel", "Snapshot", "b_step", "compile_model",
           "corpus_path", "load_model", "parse_model", "run_script"]
