"""Checker and interpreter for linear session programs."""

from ._clls import Repl, check, dual, pretty, run, run_corpus, type_equal

__all__ = ["Repl", "check", "dual", "pretty", "run", "run_corpus", "type_equal"]
