"""Built-in invariant suite: quick randomized checks plus every shipped fixture."""

from __future__ import annotations

from importlib import resources

import numpy as np

from . import linalg
from .complexes import cohomology, minimize, residual_ranks
from .generators import random_complex
from .graded.modules import check_length_criterion, graded_koszul
from .numerology import exhaustive_check
from .rings import group_algebra
from .scenario import parse_scenario, run_scenario


def fixture_names():
    return sorted(p.name for p in resources.files("patchlab.fixtures").iterdir() if p.name.endswith(".json"))


def fixture_text(name):
    return resources.files("patchlab.fixtures").joinpath(name).read_bytes()


def _snf_check(rng, count=100):
    bad = 0
    for _ in range(count):
        p = int(rng.choice([2, 3, 5]))
        m = int(rng.integers(1, 4))
        A = rng.integers(0, p**m, (int(rng.integers(1, 6)), int(rng.integers(1, 6))))
        s = linalg.smith(A, p, m)
        D = linalg.mm(linalg.mm(s.U, A, p**m), s.V, p**m)
        ok = np.array_equal(D, s.diagonal() % p**m) and list(s.vals) == sorted(s.vals)
        bad += not ok
    return {"cases": count, "failures": bad}


def _minimize_check(rng, count=10):
    bad = 0
    spec = group_algebra(3, 1, 1, 1)
    for _ in range(count):
        C = random_complex(spec, rng, max_rank=4)
        Cm = minimize(C, track=False).complex
        ok = list(Cm.ranks) == residual_ranks(C) and all(
            cohomology(C, i, actions=False).exps == cohomology(Cm, i, actions=False).exps for i in C.degrees())
        bad += not ok
    return {"cases": count, "failures": bad}


def _koszul_check(qmax=3):
    bad = cases = 0
    from itertools import combinations
    for q in range(1, qmax + 1):
        for l in range(1, q + 1):
            for subset in combinations(range(q), l):
                cases += 1
                rep = check_length_criterion(graded_koszul(2, q, subset), l)
                bad += rep["verdict"] != f"resolution of top cohomology, pd = {l}, depth = {q - l}"
    return {"cases": cases, "failures": bad}


def selfcheck(parallel=False):
    rng = np.random.default_rng(20240601)
    steps = []
    for name, res in (("snf", _snf_check(rng)), ("minimize", _minimize_check(rng)),
                      ("koszul-criterion", _koszul_check()), ("numerology", exhaustive_check(40, 8))):
        steps.append({"op": "selfcheck", "out": name, "status": "pass" if res["failures"] == 0 else "fail",
                      "result": res})
    for name in fixture_names():
        rep = run_scenario(parse_scenario(fixture_text(name)), parallel)
        expected = rep.get("summary", {}).get("status")
        want = _expected_status(name)
        steps.append({"op": "fixture", "out": name, "status": "pass" if expected == want else "fail",
                      "result": {"summary": rep["summary"], "expected_status": want}})
    counts = {s: sum(st["status"] == s for st in steps) for s in ("pass", "fail", "error")}
    status = "error" if counts["error"] else ("fail" if counts["fail"] else "pass")
    return {"version": 1, "selfcheck": True, "steps": steps, "summary": {"steps": len(steps), **counts,
                                                                          "status": status}}


def _expected_status(name):
    # fault-injection fixtures are expected to report a verdict failure
    return "fail" if name.startswith(("corrupted", "tampered")) else "pass"
