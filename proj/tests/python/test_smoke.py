import os
import pathlib

import pytest

import clls

CORPUS = pathlib.Path(os.environ.get("CLLS_CORPUS_DIR", pathlib.Path(__file__).parents[2] / "corpus"))


def source(name):
    return (CORPUS / f"{name}.clls").read_text()


def test_hello():
    r = clls.run(source("hello"))
    assert r["status"] == "ok"
    assert r["output"] == "hello world 6\n"
    assert r["leaks"] == {"endpoints": 0, "cells": 0, "tasks": 0}


def test_sieve_against_trial_division():
    n = 40
    primes = [p for p in range(2, n + 1) if all(p % d for d in range(2, p))]
    r = clls.run(source("sieve"), entry="main_sa", args=[n])
    assert r["output"] == " ".join(map(str, primes)) + " \n"


def test_check_reports_rules():
    diags = clls.check("proc main(x: close) { () };;", "leak.clls")
    assert diags
    assert diags[0]["file"] == "leak.clls"
    assert diags[0]["rule"] == "leak"
    assert clls.check(source("queue")) == []


def test_run_rejects_ill_typed_source():
    with pytest.raises(ValueError):
        clls.run("proc main() { x };;")


def test_types():
    assert clls.dual("send lint; close") == clls.dual(clls.dual(clls.dual("send lint; close")))
    assert clls.type_equal("offer of { |#A: close |#B: wait }", "offer of { |#B: wait |#A: close }")
    assert not clls.type_equal("close", "wait")


def test_seeded_runs_repeat():
    a = clls.run(source("queue"), entry="mainq", args=[6], seed=3, trace=True)
    b = clls.run(source("queue"), entry="mainq", args=[6], seed=3, trace=True)
    assert a == b
    assert a["trace"].startswith("step ")


def test_repl():
    r = clls.Repl()
    assert r.feed('proc hi() { println("hi") };;') == ("proc hi\n", False)
    assert r.feed("hi();;") == ("hi\n", False)
    assert r.feed(":quit")[1]


def test_corpus():
    ok, report = clls.run_corpus(str(CORPUS), 5)
    assert ok, report
