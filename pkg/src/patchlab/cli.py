"""Command-line entry point: ``patchlab <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import PatchlabError, ScenarioError
from .scenario import dumps, exit_code, numerology_query, parse_scenario, run_scenario

SUBCOMMANDS = ("homology", "minimize", "localize", "resolve", "invariants", "check-deduce", "check-bound",
               "patch", "patch-pair")


def _read(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}", code="missing-file") from None


def _wrap_bare(op, obj, args):
    """A one-step scenario around a bare object file."""
    sc = {"version": 1, "pipeline": []}
    step = {"op": op, "args": {}, "out": "result"}
    if op in ("homology", "minimize"):
        sc["complexes"] = {"C": obj}
        step["args"]["complex"] = "C"
        if op == "homology" and args.degree is not None:
            step["args"]["degree"] = args.degree
    elif op == "localize":
        key = "module" if "module" in obj else "complex"
        sc["modules" if key == "module" else "complexes"] = {"X": obj[key]}
        sc["operators"] = {"T": dict(obj["operator"], target="X")}
        step["args"]["operator"] = "T"
    elif op in ("resolve", "invariants"):
        sc["graded_modules"] = {"M": obj}
        step["args"]["module"] = "M"
    elif op == "check-deduce":
        sc["graded_complexes"] = {"P": obj}
        step["args"]["complex"] = "P"
        if args.l0 is not None:
            step["args"]["l0"] = args.l0
    elif op == "check-bound":
        sc["graded_modules"] = {"N": obj["module"]}
        step["args"] = {"module": "N", "submodule": obj["submodule"]}
    elif op == "patch":
        sc["towers"] = {"T": obj.get("tower", obj)}
        step["args"]["tower"] = "T"
    elif op == "patch-pair":
        t1, t2 = obj["towers"]
        sc["towers"] = {"T1": t1.get("tower", t1), "T2": t2.get("tower", t2)}
        sc["links"] = {"link": obj["link"]}
        step["args"] = {"towers": ["T1", "T2"], "link": "link"}
    sc["pipeline"].append(step)
    return json.dumps(sc, sort_keys=True)


def _scenario_for(op, raw, args):
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError:
        return parse_scenario(raw)  # reports the JSON error with a path
    if isinstance(obj, dict) and "version" in obj and "pipeline" in obj:
        sc = parse_scenario(raw)
        steps = [st for st in sc.pipeline if st["op"] == op]
        if not steps:
            raise ScenarioError(f"scenario has no {op!r} steps", code="no-steps")
        sc.pipeline = steps
    else:
        try:
            sc = parse_scenario(_wrap_bare(op, obj, args))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ScenarioError(f"$: input is neither a scenario nor a {op} object ({exc})",
                                code="schema") from None
    if getattr(args, "levels", None) is not None:
        for st in sc.pipeline:
            st["args"] = dict(st["args"], levels=args.levels)
    return sc


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _numerology_table(out):
    rows = [("n", out["signature"]["n"]), ("r1", out["signature"]["r1"]), ("r2", out["signature"]["r2"])]
    rows += list(out["invariants"].items())
    ii = out["infinity_identity"]
    rows.append(("infinity identity", f"{ii['lhs']} = {ii['rhs']}: {ii['equal']}"))
    for key in ("tw_generator_count", "rloc_dimension", "odd"):
        if key in out:
            rows.append((key, out[key]))
    if "tower_shape" in out:
        ts = out["tower_shape"]
        rows.append(("dim R_inf", f"{ts['dim_R_inf']} (expected {ts['expected']})"))
    width = max(len(str(k)) for k, _ in rows)
    return "".join(f"{str(k):<{width}}  {v}\n" for k, v in rows)


def build_parser():
    ap = argparse.ArgumentParser(prog="patchlab", description="Exact commutative algebra and finite-level patching.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, need_input=True):
        p.add_argument("--input", required=need_input, help="scenario or object JSON file")
        p.add_argument("--output", help="write the report here instead of stdout")
        p.add_argument("--parallel", action="store_true", help="run independent steps concurrently")

    common(sub.add_parser("run", help="run a full scenario pipeline"))
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run {name} steps of a scenario, or {name} on a bare object")
        common(p)
        if name in ("patch", "patch-pair"):
            p.add_argument("--levels", type=int, help="patch up to this level")
        if name == "homology":
            p.add_argument("--degree", type=int)
        if name == "check-deduce":
            p.add_argument("--l0", type=int)
    p = sub.add_parser("numerology", help="l0, q0 and related counts for a signature")
    p.add_argument("--input", help="scenario with numerology steps")
    p.add_argument("--output")
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--n", type=int)
    p.add_argument("--r1", type=int)
    p.add_argument("--r2", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--SpR", type=int)
    p.add_argument("--traces", type=int, nargs="*")
    p.add_argument("--format", choices=("json", "table"), default="json")
    p = sub.add_parser("selfcheck", help="run the built-in invariant suite and shipped fixtures")
    p.add_argument("--output")
    p.add_argument("--parallel", action="store_true")
    return ap


def _numerology(args):
    if args.input:
        sc = _scenario_for("numerology", _read(args.input), args)
        return run_scenario(sc, args.parallel), None
    if None in (args.n, args.r1, args.r2):
        raise ScenarioError("numerology needs --n, --r1 and --r2 (or --input)", code="usage")
    q = {"n": args.n, "r1": args.r1, "r2": args.r2}
    for key in ("q", "T", "SpR"):
        if getattr(args, key) is not None:
            q[key] = getattr(args, key)
    if args.traces is not None:
        q["traces"] = args.traces
    ok, out = numerology_query(q)
    return {"version": 1, "query": q, "result": out, "summary": {"status": "pass" if ok else "fail"}}, out


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selfcheck":
            from .selfcheck import selfcheck
            report = selfcheck(parallel=args.parallel)
        elif args.command == "numerology":
            report, out = _numerology(args)
            if out is not None and args.format == "table":
                _emit(_numerology_table(out), args.output)
                return exit_code(report)
        elif args.command == "run":
            report = run_scenario(parse_scenario(_read(args.input)), args.parallel)
        else:
            report = run_scenario(_scenario_for(args.command, _read(args.input), args), args.parallel)
    except PatchlabError as exc:
        _emit(dumps({"version": 1, "error": exc.to_json(), "summary": {"status": "error"}}), args.output)
        return 1
    _emit(dumps(report), args.output)
    return exit_code(report)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
