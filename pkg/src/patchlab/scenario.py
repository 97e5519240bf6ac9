"""Scenario files: loading, pipeline execution and deterministic reports."""

from __future__ import annotations

import hashlib
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import numerology as nm
from .complexes import (Complex, base_change, check_complex, cohomology, minimize, residual_ranks,
                        same_homology)
from .errors import PatchlabError, ScenarioError
from .graded.modules import (GradedComplex, GradedModule, check_depth_bound, check_length_criterion,
                             depth_pd, graded_koszul, hilbert_data, minimal_free_resolution,
                             nearly_faithful, poly, stabilization_bound, vec_from_json)
from .linalg import FiniteModule, Matrix, kernel_image_cokernel, smith_normal_form
from .ordinary import (Operator, fitting_decomposition, localization_projector, ordinary_part_complex,
                       verify_fitting, verify_ordinary_complex)
from .patching import Link, TowerConfig, faithfulness_check, patch, patch_pair
from .rings import RingSpec, quotient

VERSION = 1
SECTIONS = ("rings", "matrices", "complexes", "modules", "graded_modules", "graded_complexes",
            "operators", "towers", "links", "numerology")
MAX_SAFE = 2**53 - 1


@dataclass
class Scenario:
    version: int
    objects: dict
    pipeline: list
    sha256: str
    raw: dict = field(repr=False, default_factory=dict)

    def lookup(self, section, name, where):
        try:
            return self.objects[section][name]
        except KeyError:
            raise ScenarioError(f"{where}: unknown {section[:-1]} {name!r}", code="unresolved") from None


def _ring_ref(obj, rings, path):
    ref = obj.get("ring")
    if isinstance(ref, str):
        if ref not in rings:
            raise ScenarioError(f"{path}.ring: unknown ring {ref!r}", code="unresolved")
        return dict(obj, ring=rings[ref].to_json())
    return obj


def parse_scenario(text) -> Scenario:
    raw_bytes = text.encode() if isinstance(text, str) else bytes(text)
    try:
        data = json.loads(raw_bytes)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"$: invalid JSON ({exc.msg} at line {exc.lineno})", code="schema") from None
    if not isinstance(data, dict):
        raise ScenarioError("$: scenario must be a JSON object", code="schema")
    if data.get("version") != VERSION:
        raise ScenarioError(f"$.version: unsupported version {data.get('version')!r}", code="version")
    unknown = sorted(set(data) - set(SECTIONS) - {"version", "pipeline", "description"})
    if unknown:
        raise ScenarioError(f"$.{unknown[0]}: unknown section", code="schema")
    objects = {s: {} for s in SECTIONS}
    for s in SECTIONS:
        if not isinstance(data.get(s, {}), dict):
            raise ScenarioError(f"$.{s}: must be an object of named entries", code="schema")
    seen = {}
    for s in SECTIONS:
        for name in data.get(s, {}):
            if name in seen:
                raise ScenarioError(f"$.{s}.{name}: name already used in $.{seen[name]}", code="duplicate-name")
            seen[name] = s
    _load_objects(data, objects)
    pipeline = data.get("pipeline", [])
    if not isinstance(pipeline, list):
        raise ScenarioError("$.pipeline: must be a list", code="schema")
    outs = set()
    steps = []
    for i, st in enumerate(pipeline):
        path = f"$.pipeline[{i}]"
        if not isinstance(st, dict) or "op" not in st:
            raise ScenarioError(f"{path}: step needs an 'op'", code="schema")
        if st["op"] not in OPS:
            raise ScenarioError(f"{path}.op: unknown operation {st['op']!r}", code="unknown-op")
        args = st.get("args", {})
        if not isinstance(args, dict):
            raise ScenarioError(f"{path}.args: must be an object", code="schema")
        out = st.get("out", f"step{i}")
        if out in outs or out in seen:
            raise ScenarioError(f"{path}.out: name {out!r} is already taken", code="duplicate-name")
        _check_refs(st["op"], args, data, outs, path)
        outs.add(out)
        steps.append({"op": st["op"], "args": args, "out": out})
    sha = hashlib.sha256(raw_bytes).hexdigest()
    return Scenario(VERSION, objects, steps, sha, data)


# argument keys that name scenario objects, per operation
_REF_ARGS = {
    "homology": {"complex": "complexes"}, "minimize": {"complex": "complexes"},
    "same-homology": {"complexes": "complexes"},
    "base-change": {"complex": "complexes", "ring": "rings"}, "snf": {"matrix": "matrices"},
    "localize": {"operator": "operators"}, "resolve": {"module": "graded_modules"},
    "invariants": {"module": "graded_modules"}, "check-deduce": {"complex": "graded_complexes"},
    "check-bound": {"module": "graded_modules"}, "nearly-faithful": {"module": "graded_modules"},
    "patch": {"tower": "towers"}, "patch-pair": {"towers": "towers", "link": "links"},
    "numerology": {"query": "numerology"},
}


def _check_refs(op, args, data, outs, path):
    for key, section in _REF_ARGS.get(op, {}).items():
        if key not in args:
            continue
        names = args[key] if isinstance(args[key], list) else [args[key]]
        for name in names:
            if not isinstance(name, str) or (name not in data.get(section, {}) and name not in outs):
                raise ScenarioError(f"{path}.args.{key}: {name!r} is not declared in $.{section} "
                                    "or an earlier output", code="unresolved-name")


def _load_objects(data, objects):
    rings = objects["rings"]
    for name, obj in data.get("rings", {}).items():
        rings[name] = _wrap(f"$.rings.{name}", RingSpec.from_json, obj)
    for name, obj in data.get("matrices", {}).items():
        objects["matrices"][name] = _wrap(f"$.matrices.{name}", Matrix.from_json,
                                          _ring_ref(obj, rings, f"$.matrices.{name}"))
    for name, obj in data.get("complexes", {}).items():
        path = f"$.complexes.{name}"
        C = _wrap(path, Complex.from_json, _ring_ref(obj, rings, path))
        rep = check_complex(C)
        if not rep["valid"]:
            raise ScenarioError(f"{path}: complex {name!r} has d∘d != 0 in degree {rep['failures'][0]['degree']}",
                                code="not-a-complex")
        objects["complexes"][name] = C
    for name, obj in data.get("modules", {}).items():
        objects["modules"][name] = _wrap(f"$.modules.{name}", FiniteModule.from_json, obj)
    for name, obj in data.get("graded_modules", {}).items():
        path = f"$.graded_modules.{name}"
        objects["graded_modules"][name] = _wrap(path, GradedModule.from_json, _ring_ref(obj, rings, path))
    for name, obj in data.get("graded_complexes", {}).items():
        path = f"$.graded_complexes.{name}"
        if "koszul" in obj:
            k = obj["koszul"]
            G = _wrap(path, lambda _: graded_koszul(int(k["p"]), int(k["q"]), [int(i) for i in k["subset"]]), k)
        else:
            G = _wrap(path, GradedComplex.from_json, _ring_ref(obj, rings, path))
        objects["graded_complexes"][name] = G
    for name, obj in data.get("operators", {}).items():
        objects["operators"][name] = _load_operator(name, obj, objects)
    for name, obj in data.get("towers", {}).items():
        objects["towers"][name] = _wrap(f"$.towers.{name}", TowerConfig.from_json, obj)
    for name, obj in data.get("links", {}).items():
        objects["links"][name] = _wrap(f"$.links.{name}", Link.from_json, obj)
    for name, obj in data.get("numerology", {}).items():
        objects["numerology"][name] = dict(obj)


def _wrap(path, fn, obj):
    try:
        return fn(obj)
    except PatchlabError as exc:
        raise ScenarioError(f"{path}: {exc}", code=exc.code) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: malformed entry ({type(exc).__name__}: {exc})", code="schema") from None


def _load_operator(name, obj, objects):
    path = f"$.operators.{name}"
    target = obj.get("target")
    if target in objects["modules"]:
        M = objects["modules"][target]
        return _wrap(path, lambda o: Operator(M, [np.array(o["matrix"], dtype=np.int64)], name), obj)
    if target in objects["complexes"]:
        C = objects["complexes"][target]
        from .complexes import ring_matrix_from_json
        return _wrap(path, lambda o: Operator(C, [ring_matrix_from_json(m, C.ring) for m in o["matrices"]], name),
                     obj)
    raise ScenarioError(f"{path}.target: unknown module or complex {target!r}", code="unresolved")


# -- operations ------------------------------------------------------------------------

class _Context:
    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.outputs = {}

    def get(self, section, name, where):
        if name in self.outputs and self.outputs[name][0] == section:
            return self.outputs[name][1]
        return self.sc.lookup(section, name, where)


def _arg(args, key, where, default=...):
    if key in args:
        return args[key]
    if default is ...:
        raise ScenarioError(f"{where}.args: missing {key!r}", code="schema")
    return default


def op_homology(ctx, args, where):
    C = ctx.get("complexes", _arg(args, "complex", where), where)
    degs = [int(args["degree"])] if "degree" in args else list(C.degrees())
    res = {str(i): cohomology(C, i, actions=bool(args.get("actions", True))).to_json() for i in degs}
    return True, {"cohomology": res}, None


def op_minimize(ctx, args, where):
    C = ctx.get("complexes", _arg(args, "complex", where), where)
    mz = minimize(C, track=False)
    out = {"complex": mz.complex.to_json(), "certificate": mz.certificate.to_json(),
           "residual_ranks": residual_ranks(C)}
    ok = mz.certificate.minimal and residual_ranks(C) == list(mz.complex.ranks)
    if args.get("compare", True):
        cmp = same_homology(C, mz.complex)
        out["same_homology"] = cmp
        ok = ok and cmp["verdict"] != "distinct"
    return ok, out, ("complexes", mz.complex)


def op_same_homology(ctx, args, where):
    a, b = _arg(args, "complexes", where)
    rep = same_homology(ctx.get("complexes", a, where), ctx.get("complexes", b, where))
    return rep["verdict"] != "distinct", rep, None


def op_base_change(ctx, args, where):
    C = ctx.get("complexes", _arg(args, "complex", where), where)
    dst = ctx.get("rings", _arg(args, "ring", where), where)
    D = base_change(C, quotient(C.ring, dst))
    return True, {"complex": D.to_json()}, ("complexes", D)


def op_snf(ctx, args, where):
    A = ctx.get("matrices", _arg(args, "matrix", where), where)
    U, D, V = smith_normal_form(A)
    ok = (U @ A @ V) == D
    ker, im, coker = kernel_image_cokernel(A)
    return ok, {"U": U.to_json(), "D": D.to_json(), "V": V.to_json(), "kernel": ker.to_json(),
                "image": im.to_json(), "cokernel": coker.to_json()}, None


def op_localize(ctx, args, where):
    if "projector" in args:
        spec = args["projector"]
        ops = [(ctx.get("operators", n, where), int(eta)) for n, eta in spec.get("ops", [])]
        pis = [ctx.get("operators", n, where) for n in spec.get("pis", [])]
        P = localization_projector(ops, pis)
        return True, {"projector": P.to_json()}, ("operators", P)
    T = ctx.get("operators", _arg(args, "operator", where), where)
    if T.on_module:
        res = fitting_decomposition(T.target, T)
        chk = verify_fitting(T.target, T.matrix, res)
        return chk["ok"], {"fitting": res.to_json(), "checks": chk}, None
    oc = ordinary_part_complex(T.target, T)
    chk = verify_ordinary_complex(T.target, T, oc)
    return chk["ok"], {"ordinary_complex": oc.complex.to_json(), "power": oc.n, "checks": chk}, \
        ("complexes", oc.complex)


def op_resolve(ctx, args, where):
    M = ctx.get("graded_modules", _arg(args, "module", where), where)
    res = minimal_free_resolution(M)
    return bool(res.exact is not False and res.minimal), {"resolution": res.to_json()}, None


def op_invariants(ctx, args, where):
    M = ctx.get("graded_modules", _arg(args, "module", where), where)
    rep = depth_pd(M, oracle=bool(args.get("oracle", True)))
    D = int(args.get("bound", stabilization_bound(M)))
    hd = hilbert_data(M, D)
    out = {"report": rep.to_json(), "hilbert": hd.to_json(),
           "auslander_buchsbaum": rep.depth + rep.proj_dim == M.q}
    return out["auslander_buchsbaum"] and rep.oracle.get("status") != "oracle-short", out, None


def op_check_deduce(ctx, args, where):
    P = ctx.get("graded_complexes", _arg(args, "complex", where), where)
    l0 = int(_arg(args, "l0", where, len(P.shifts) - 1))
    rep = check_length_criterion(P, l0)
    expect = args.get("expect")
    ok = rep["verdict"] == expect if expect else rep["verdict"] != "equality but conclusions fail"
    return ok, rep, None


def op_check_bound(ctx, args, where):
    N = ctx.get("graded_modules", _arg(args, "module", where), where)
    gens = [vec_from_json(v, N.p) for v in _arg(args, "submodule", where)]
    rep = check_depth_bound(N, gens)
    return rep["holds"], rep, None


def op_nearly_faithful(ctx, args, where):
    M = ctx.get("graded_modules", _arg(args, "module", where), where)
    primes = [[poly(M.p, f) for f in P] for P in _arg(args, "minimal_primes", where)]
    rep = nearly_faithful(M, primes)
    expect = args.get("expect", "nearly-faithful")
    return rep["verdict"] == expect, rep, None


def op_patch(ctx, args, where):
    T = ctx.get("towers", _arg(args, "tower", where), where)
    L = int(args.get("levels", T.levels))
    r = patch(T, L)
    out = r.to_json()
    out["faithfulness"] = faithfulness_check(r)
    expect = args.get("expect_faithfulness")
    ok = r.report["pass"] and (expect is None or out["faithfulness"]["verdict"] == expect)
    return ok, out, None


def op_patch_pair(ctx, args, where):
    n1, n2 = _arg(args, "towers", where)
    t1, t2 = ctx.get("towers", n1, where), ctx.get("towers", n2, where)
    link = ctx.get("links", _arg(args, "link", where), where)
    L = args.get("levels")
    try:
        r1, r2, rep = patch_pair(t1, t2, link, None if L is None else int(L))
    except PatchlabError as exc:
        if exc.code != "link-square":
            raise
        return False, {"pass": False, "failure": exc.to_json()}, None
    return rep["pass"], {"first": r1.to_json(), "second": r2.to_json(), "comparison": rep}, None


def numerology_query(q):
    s = nm.SignatureInput(int(q["n"]), int(q["r1"]), int(q["r2"]))
    inv = nm.invariants(s)
    lhs, rhs, eq = nm.check_infinity_identity(s)
    out = {"signature": {"n": s.n, "r1": s.r1, "r2": s.r2}, "invariants": inv.to_json(),
           "infinity_identity": {"lhs": lhs, "rhs": rhs, "equal": eq}}
    ok = eq
    if "T" in q and "q" in q:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            g = nm.tw_generator_count(int(q["q"]), int(q["T"]), s)
        out["tw_generator_count"] = g
        out["tw_generator_count_negative"] = g < 0
        shape = nm.tower_shape(int(q["q"]), int(q["T"]), s)
        out["tower_shape"] = vars(shape)
        ok = ok and shape.consistent
    if "SpR" in q:
        out["rloc_dimension"] = nm.rloc_dimension(s.n, int(q["SpR"]), s)
    if "traces" in q:
        out["odd"] = nm.oddness(q["traces"], s.n)
    if "selmer" in q:
        sel = dict(q["selmer"])
        sel["local_terms"] = tuple(sel.get("local_terms", ()))
        out["selmer_difference"] = nm.selmer_difference(nm.SelmerInput(**sel))
    return ok, out


def op_numerology(ctx, args, where):
    q = ctx.get("numerology", args["query"], where) if "query" in args else args
    ok, out = numerology_query(q)
    return ok, out, None


OPS = {
    "homology": op_homology, "minimize": op_minimize, "same-homology": op_same_homology,
    "base-change": op_base_change, "snf": op_snf, "localize": op_localize, "resolve": op_resolve,
    "invariants": op_invariants, "check-deduce": op_check_deduce, "check-bound": op_check_bound,
    "nearly-faithful": op_nearly_faithful, "patch": op_patch, "patch-pair": op_patch_pair,
    "numerology": op_numerology,
}


# -- execution ---------------------------------------------------------------------------

def _refs(args):
    out = set()
    if isinstance(args, str):
        out.add(args)
    elif isinstance(args, dict):
        for v in args.values():
            out |= _refs(v)
    elif isinstance(args, list):
        for v in args:
            out |= _refs(v)
    return out


def _waves(steps):
    """Group steps into waves; a step waits for every earlier step whose output it names."""
    level = {}
    waves = []
    for i, st in enumerate(steps):
        deps = [level[j] for j in range(i) if steps[j]["out"] in _refs(st["args"])]
        lv = max(deps, default=-1) + 1
        level[i] = lv
        while len(waves) <= lv:
            waves.append([])
        waves[lv].append(i)
    return waves


def _run_step(ctx, i, st):
    where = f"$.pipeline[{i}]"
    try:
        ok, result, obj = OPS[st["op"]](ctx, st["args"], where)
        return {"op": st["op"], "out": st["out"], "status": "pass" if ok else "fail", "result": result}, obj
    except PatchlabError as exc:
        return {"op": st["op"], "out": st["out"], "status": "error", "error": exc.to_json()}, None


def run_scenario(sc: Scenario, parallel=False):
    ctx = _Context(sc)
    results = [None] * len(sc.pipeline)
    for wave in _waves(sc.pipeline):
        if parallel and len(wave) > 1:
            with ThreadPoolExecutor(max_workers=min(4, len(wave))) as ex:
                done = list(ex.map(lambda i: _run_step(ctx, i, sc.pipeline[i]), wave))
        else:
            done = [_run_step(ctx, i, sc.pipeline[i]) for i in wave]
        for i, (rec, obj) in zip(wave, done):
            results[i] = rec
            if obj is not None:
                ctx.outputs[sc.pipeline[i]["out"]] = obj
    counts = {s: sum(r["status"] == s for r in results) for s in ("pass", "fail", "error")}
    status = "error" if counts["error"] else ("fail" if counts["fail"] else "pass")
    return {"version": VERSION, "scenario_sha256": sc.sha256, "steps": results,
            "summary": {"steps": len(results), **counts, "status": status}}


def exit_code(report):
    return {"pass": 0, "fail": 2, "error": 1}[report["summary"]["status"]]


def portable(x):
    """JSON-ready copy: numpy scalars to ints, integers beyond 2^53 - 1 to decimal strings."""
    if isinstance(x, dict):
        return {str(k): portable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [portable(v) for v in x]
    if isinstance(x, np.ndarray):
        return portable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        x = int(x)
        return str(x) if abs(x) > MAX_SAFE else x
    return x


def dumps(report):
    return json.dumps(portable(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
