"""Graded modules over F_p[x_1..x_q]/J: Hilbert data, resolutions, depth.

A GradedModule is the cokernel of a map of graded free S-modules, where S is
the polynomial ring; the ring relations J act through extra relations f*e_i.
Projective dimensions are taken over S.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, product

import numpy as np

from ..errors import BoundTooSmall, GradedError
from ..linalg import rank_mod_p
from ..rings import RingSpec, graded_ring
from .hilbert import (dimension_and_multiplicity, module_numerator, series_values,
                      times_one_minus_t_power)
from .poly import (add_scaled, buchberger, clean, combination, mono_add, monomials_of_degree,
                   poly_vec, syzygies, vec_degree)


def ring_polys(spec: RingSpec):
    """The ring relations as polynomial dicts, checked homogeneous."""
    out = []
    for rel in spec.relations:
        f = {}
        for c, a in rel:
            if len(a) != spec.q:
                raise GradedError(f"relation monomial {list(a)} has wrong arity")
            f[a] = (f.get(a, 0) + c) % spec.p
        f = {a: c for a, c in f.items() if c}
        if len({sum(a) for a in f}) > 1:
            raise GradedError("ring relation is not homogeneous", code="inhomogeneous")
        if f:
            out.append(f)
    return out


def vec_to_json(v):
    return [[int(c), int(pos), list(a)] for (pos, a), c in sorted(v.items())]


def vec_from_json(obj, p):
    v = {}
    for c, pos, a in obj:
        t = (int(pos), tuple(int(x) for x in a))
        v[t] = (v.get(t, 0) + int(c)) % p
    return clean(v, p)


def poly(spec_or_p, terms):
    """Polynomial dict from {exps: c} or [(c, exps)]."""
    p = spec_or_p.p if isinstance(spec_or_p, RingSpec) else spec_or_p
    items = terms.items() if isinstance(terms, dict) else [(tuple(a), c) for c, a in terms]
    out = {}
    for a, c in items:
        out[tuple(a)] = (out.get(tuple(a), 0) + c) % p
    return {a: c for a, c in out.items() if c}


def variable(q, i):
    return {tuple(1 if k == i else 0 for k in range(q)): 1}


@dataclass
class GradedModule:
    """coker(relations) on the free module with the given degree shifts."""

    ring: RingSpec
    shifts: tuple
    relations: list = field(default_factory=list)

    def __post_init__(self):
        if not self.ring.graded:
            raise GradedError("GradedModule needs a graded-poly-quotient ring")
        self.shifts = tuple(int(s) for s in self.shifts)
        rels = []
        for v in self.relations:
            v = clean(v, self.p)
            if not v:
                continue
            for pos, a in v:
                if not 0 <= pos < len(self.shifts) or len(a) != self.q:
                    raise GradedError(f"relation term {(pos, a)} does not fit the module")
            vec_degree(v, self.shifts)
            rels.append(v)
        self.relations = rels

    @property
    def p(self):
        return self.ring.p

    @property
    def q(self):
        return self.ring.q

    @property
    def rank(self):
        return len(self.shifts)

    def all_relations(self):
        extra = [poly_vec(f, i) for f in ring_polys(self.ring) for i in range(self.rank)]
        return self.relations + extra

    @cached_property
    def gb(self):
        return buchberger(self.all_relations(), self.p, self.q, self.shifts)

    @cached_property
    def numerator(self):
        leads = {}
        for pos, a in self.gb.leads:
            leads.setdefault(pos, []).append(a)
        return module_numerator(leads, self.shifts)

    def is_zero(self):
        return not self.numerator

    def dim_mult(self):
        return dimension_and_multiplicity(self.numerator, self.q)

    def with_relations(self, more):
        return GradedModule(self.ring, self.shifts, self.relations + list(more))

    def to_json(self):
        return {"ring": self.ring.to_json(), "shifts": list(self.shifts),
                "relations": [vec_to_json(v) for v in self.relations]}

    @classmethod
    def from_json(cls, obj):
        ring = RingSpec.from_json(obj["ring"])
        return cls(ring, tuple(obj["shifts"]), [vec_from_json(v, ring.p) for v in obj.get("relations", [])])


def free_module(ring, shifts=(0,)):
    return GradedModule(ring, tuple(shifts), [])


def cyclic_module(ring, ideal_gens):
    """R / (ideal_gens) as a module generated in degree 0."""
    return GradedModule(ring, (0,), [poly_vec(f) for f in ideal_gens])


def monomial_quotient(p, q, monos):
    return cyclic_module(graded_ring(p, q), [{tuple(a): 1} for a in monos])


def direct_sum(*mods):
    ring = mods[0].ring
    shifts, rels, off = [], [], 0
    for M in mods:
        shifts += list(M.shifts)
        rels += [{(pos + off, a): c for (pos, a), c in v.items()} for v in M.relations]
        off += M.rank
    return GradedModule(ring, tuple(shifts), rels)


# -- Hilbert data -------------------------------------------------------------

@dataclass
class HilbertData:
    values: list
    krull_dim: int
    multiplicity: int
    numerator: dict

    def to_json(self):
        return {"values": self.values, "krull_dim": self.krull_dim, "multiplicity": self.multiplicity,
                "numerator": {str(k): v for k, v in sorted(self.numerator.items())}}


def stabilization_bound(M: GradedModule):
    degs = [vec_degree(v, M.shifts) for v in M.all_relations()]
    return 2 * max(degs, default=0) + M.q


def hilbert_data(M: GradedModule, D):
    need = stabilization_bound(M)
    if D < need:
        raise BoundTooSmall(f"bound too small: D={D} < {need}")
    num = M.numerator
    # HF agrees with its polynomial once d exceeds deg(numerator) - q
    if num and max(num) - M.q >= D:
        raise BoundTooSmall(f"bound too small: Hilbert polynomial not stabilized by D={D}")
    dim, e = dimension_and_multiplicity(num, M.q)
    return HilbertData(series_values(num, M.q, D), dim, e, num)


# -- degreewise linear algebra -------------------------------------------------

def _basis_index(shifts, q, d):
    idx = {}
    for pos, s in enumerate(shifts):
        for a in monomials_of_degree(q, d - s):
            idx[(pos, a)] = len(idx)
    return idx


def component_rows(vectors, degs, shifts, q, d, p):
    """Rows spanning the degree-d part of the submodule generated by vectors."""
    idx = _basis_index(shifts, q, d)
    rows = []
    for v, e in zip(vectors, degs):
        for m in monomials_of_degree(q, d - e):
            row = np.zeros(len(idx), dtype=np.int64)
            for (pos, a), c in v.items():
                row[idx[(pos, mono_add(a, m))]] = c
            rows.append(row)
    if not rows:
        return np.zeros((0, len(idx)), dtype=np.int64)
    return np.array(rows) % p


def minimal_generators(vectors, shifts, q, p, degs=None):
    """Subset of homogeneous vectors minimally generating the same submodule."""
    if degs is None:
        degs = [vec_degree(v, shifts) for v in vectors]
    items = sorted((e, i) for i, (v, e) in enumerate(zip(vectors, degs)) if v)
    kept = []
    for d in sorted({e for e, _ in items}):
        base = component_rows([vectors[i] for i in kept], [degs[i] for i in kept], shifts, q, d, p)
        r = rank_mod_p(base, p) if base.size else 0
        for e, i in items:
            if e != d:
                continue
            row = component_rows([vectors[i]], [d], shifts, q, d, p)
            trial = np.vstack([base, row])
            r2 = rank_mod_p(trial, p)
            if r2 > r:
                kept.append(i)
                base, r = trial, r2
    kept.sort()
    return [vectors[i] for i in kept], [degs[i] for i in kept]


def prune(M: GradedModule):
    """Remove generators killed by a relation with a constant entry."""
    p = M.p
    shifts = list(M.shifts)
    rels = [dict(v) for v in M.all_relations()]
    zero = (0,) * M.q
    while True:
        hit = None
        for k, r in enumerate(rels):
            for (pos, a), c in r.items():
                if a == zero:
                    hit = (k, pos, c)
                    break
            if hit:
                break
        if hit is None:
            break
        k, i, c = hit
        r = rels.pop(k)
        cinv = pow(c, -1, p)
        new = []
        for s in rels:
            coeff = {a: x for (pos, a), x in s.items() if pos == i}
            s = dict(s)
            for a, x in coeff.items():
                add_scaled(s, r, (-x * cinv) % p, a, p)
            s = {(pos if pos < i else pos - 1, a): x for (pos, a), x in s.items() if pos != i}
            new.append(clean(s, p))
        rels = [s for s in new if s]
        shifts.pop(i)
    return tuple(shifts), rels


# -- resolutions ----------------------------------------------------------------

@dataclass
class Resolution:
    """F_0 <- F_1 <- ... ; maps[i] lists the images of the basis of F_{i+1} in F_i."""

    p: int
    q: int
    shifts: list
    maps: list
    minimal: bool = True
    exact: bool | None = None
    check_bound: int | None = None

    @property
    def length(self):
        return len(self.maps)

    @property
    def ranks(self):
        return [len(s) for s in self.shifts]

    def to_json(self):
        return {"p": self.p, "q": self.q, "ranks": self.ranks, "shifts": [list(s) for s in self.shifts],
                "maps": [[vec_to_json(v) for v in m] for m in self.maps], "minimal": self.minimal,
                "exact": self.exact, "check_bound": self.check_bound}


def minimal_free_resolution(M: GradedModule, check=True):
    p, q = M.p, M.q
    shifts0, rels = prune(M)
    if not shifts0:
        return Resolution(p, q, [], [], True, True, 0)
    gens, degs = minimal_generators(rels, shifts0, q, p)
    all_shifts = [list(shifts0)]
    maps = []
    while gens:
        maps.append(gens)
        all_shifts.append(list(degs))
        if len(maps) > q:
            raise GradedError("resolution longer than the number of variables", code="syzygy-bound")
        syz, _ = syzygies(gens, p, q, all_shifts[-2], degs)
        sdegs = [vec_degree(v, degs) for v in syz]
        gens, degs = minimal_generators(syz, degs, q, p, sdegs)
    minimal = all(sum(a) > 0 for m in maps for v in m for _, a in v)
    res = Resolution(p, q, all_shifts, maps, minimal)
    if check:
        check_resolution(res, M)
    return res


def _map_rank(res, i, d):
    """Rank of the degree-d part of F_{i+1} -> F_i."""
    if i >= len(res.maps):
        return 0
    rows = component_rows(res.maps[i], res.shifts[i + 1], res.shifts[i], res.q, d, res.p)
    return rank_mod_p(rows, res.p) if rows.size else 0


def _free_dim(shifts, q, d):
    return sum(len(monomials_of_degree(q, d - s)) for s in shifts)


def check_resolution(res: Resolution, M: GradedModule, bound=None):
    """Composites vanish, H_0 = M and exactness up to a degree bound."""
    p, q = res.p, res.q
    for i in range(len(res.maps) - 1):
        for v in res.maps[i + 1]:
            if clean(combination(v, res.maps[i], p), p):
                raise GradedError(f"resolution composite nonzero at step {i}")
    if bound is None:
        bound = max((s for sh in res.shifts for s in sh), default=0) + 1
    hf = series_values(M.numerator, q, bound)
    lo = min((s for sh in res.shifts for s in sh), default=0)
    for d in range(lo, bound + 1):
        ranks = [_map_rank(res, i, d) for i in range(len(res.maps))] + [0]
        h0 = _free_dim(res.shifts[0], q, d) - ranks[0] if res.shifts else 0
        expect = hf[d] if d >= 0 else 0
        if h0 != expect:
            raise GradedError(f"resolution does not present the module in degree {d}")
        for i in range(1, len(res.shifts)):
            if _free_dim(res.shifts[i], q, d) - ranks[i - 1] != ranks[i]:
                raise GradedError(f"resolution not exact at F_{i} in degree {d}")
    res.exact, res.check_bound = True, bound
    return True


# -- depth ----------------------------------------------------------------------

def _linear_forms(p, q):
    out = []
    for coeffs in product(range(p), repeat=q):
        nz = [c for c in coeffs if c]
        if nz and nz[0] == 1:
            out.append({tuple(1 if k == i else 0 for k in range(q)): c for i, c in enumerate(coeffs) if c})
    return out


def _power_sums(q, degrees=(2, 3)):
    out = []
    for d in degrees:
        for mask in range(1, 1 << q):
            out.append({tuple(d if k == i else 0 for k in range(q)): 1 for i in range(q) if mask >> i & 1})
    return out


def candidate_forms(p, q):
    """Linear forms up to scalars, then power sums of subsets of variables."""
    return _linear_forms(p, q) + _power_sums(q)


def is_nonzerodivisor(M: GradedModule, f):
    """Graded f of positive degree is M-regular iff HS(M/fM) = (1 - t^deg f) HS(M)."""
    e = sum(next(iter(f)))
    quot = M.with_relations([poly_vec(f, i) for i in range(M.rank)])
    return quot.numerator == times_one_minus_t_power(M.numerator, e)


def regular_sequence_search(M: GradedModule, target, max_tests=4000):
    """Depth-first search for an M-regular sequence of length ``target``.

    Returns (best sequence found, exhausted flag).  ``exhausted`` is False if
    the test budget ran out before the search space was covered.
    """
    cands = candidate_forms(M.p, M.q)
    best = []
    tests = 0
    seen = set()

    def key(f):
        return tuple(sorted(f.items()))

    def dfs(N, seq, start):
        nonlocal best, tests
        if len(seq) > len(best):
            best = list(seq)
        if len(best) >= target:
            return True
        for k in range(start, len(cands)):
            f = cands[k]
            s = frozenset(key(g) for g in seq + [f])
            if s in seen:
                continue
            seen.add(s)
            tests += 1
            if tests > max_tests:
                return False
            if is_nonzerodivisor(N, f):
                if dfs(N.with_relations([poly_vec(f, i) for i in range(N.rank)]), seq + [f], 0):
                    return True
            if tests > max_tests:
                return False
        return False

    if target > 0:
        dfs(M, [], 0)
    return best, tests <= max_tests


@dataclass
class HomologicalReport:
    depth: int
    proj_dim: int
    krull_dim: int
    hilbert_values: list
    multiplicity: int
    oracle: dict = field(default_factory=dict)
    resolution: Resolution | None = None

    def to_json(self):
        return {"depth": self.depth, "proj_dim": self.proj_dim, "krull_dim": self.krull_dim,
                "hilbert_values": self.hilbert_values, "multiplicity": self.multiplicity,
                "oracle": self.oracle}


def depth_pd(M: GradedModule, oracle=True, D=None):
    if M.is_zero():
        raise GradedError("the zero module has no depth", code="zero-module")
    res = minimal_free_resolution(M)
    pd = res.length
    depth = M.q - pd
    dim, e = M.dim_mult()
    if depth > dim:
        raise GradedError(f"depth {depth} exceeds dimension {dim}")
    info = {"status": "skipped"}
    if oracle:
        seq, finished = regular_sequence_search(M, depth)
        if len(seq) > depth:
            raise GradedError("regular sequence longer than q - pd")
        status = "confirmed" if len(seq) == depth else "oracle-short"
        info = {"status": status, "found": len(seq), "budget_ok": finished,
                "sequence": [[[c, list(a)] for a, c in sorted(f.items())] for f in seq]}
    D = stabilization_bound(M) if D is None else D
    vals = series_values(M.numerator, M.q, D)
    return HomologicalReport(depth, pd, dim, vals, e, info, res)


# -- submodules, annihilators, the depth bound ------------------------------------

def subquotient_module(ring, ambient_shifts, gens, modulo):
    """Module generated by ``gens`` inside F/(modulo), presented over its generators."""
    p, q = ring.p, ring.q
    pairs = [(clean(g, p), vec_degree(clean(g, p), ambient_shifts)) for g in gens]
    pairs = [(g, d) for g, d in pairs if g]
    gens = [g for g, _ in pairs]
    degs = [d for _, d in pairs]
    if not gens:
        return GradedModule(ring, (), [])
    modulo = [clean(v, p) for v in modulo]
    modulo = [v for v in modulo if v]
    mdegs = [vec_degree(v, ambient_shifts) for v in modulo]
    syz, _ = syzygies(gens + modulo, p, q, tuple(ambient_shifts), degs + mdegs)
    k = len(gens)
    rels = []
    for s in syz:
        r = {(pos, a): c for (pos, a), c in s.items() if pos < k}
        if r:
            rels.append(r)
    return GradedModule(ring, tuple(degs), rels)


def submodule(N: GradedModule, gens):
    return subquotient_module(N.ring, N.shifts, gens, N.all_relations())


def check_depth_bound(N: GradedModule, gens, oracle=False):
    """Check dim(M) >= depth(N) for the submodule M generated by ``gens``."""
    if all(N.gb.contains(clean(g, N.p)) for g in gens):
        raise GradedError("submodule is zero", code="zero-submodule")
    M = submodule(N, gens)
    dim_M, _ = M.dim_mult()
    depth_N = depth_pd(N, oracle=oracle).depth
    return {"depth_N": depth_N, "dim_M": dim_M, "holds": dim_M >= depth_N}


def ideal_intersection(ideals, p, q):
    """Intersection of ideals (lists of homogeneous polys) via syzygies in S^n."""
    n = len(ideals)
    if n == 0:
        return [{(0,) * q: 1}]
    if n == 1:
        return list(ideals[0])
    shifts = (0,) * n
    vecs = [{(i, (0,) * q): 1 for i in range(n)}]
    for i, I in enumerate(ideals):
        vecs += [poly_vec(f, i) for f in I if f]
    degs = [vec_degree(v, shifts) for v in vecs]
    syz, _ = syzygies(vecs, p, q, shifts, degs)
    out = []
    for s in syz:
        f = {a: c for (pos, a), c in s.items() if pos == 0}
        if f:
            out.append(f)
    return out


def annihilator(M: GradedModule):
    """Generators of Ann_S(M) (contains the ring relations)."""
    p, q = M.p, M.q
    U = M.all_relations()
    if not M.rank:
        return [{(0,) * q: 1}]
    colons = []
    udegs = [vec_degree(v, M.shifts) for v in U]
    for i in range(M.rank):
        e = {(i, (0,) * q): 1}
        syz, _ = syzygies([e] + U, p, q, M.shifts, [M.shifts[i]] + udegs)
        colons.append([f for f in ({a: c for (pos, a), c in s.items() if pos == 0} for s in syz) if f])
    return ideal_intersection(colons, p, q)


def nearly_faithful(M: GradedModule, primes):
    """Ann_R(M) lies in every declared minimal prime of R."""
    if not primes:
        raise GradedError("nearly_faithful needs at least one minimal prime", code="no-primes")
    ann = annihilator(M)
    J = [poly_vec(f) for f in ring_polys(M.ring)]
    per = []
    for P in primes:
        G = buchberger([poly_vec(f) for f in P] + J, M.p, M.q, (0,))
        outside = [f for f in ann if not G.contains(poly_vec(f))]
        per.append({"prime": [[[c, list(a)] for a, c in sorted(f.items())] for f in P],
                    "contains_annihilator": not outside})
    ok = all(x["contains_annihilator"] for x in per)
    return {"verdict": "nearly-faithful" if ok else "not-nearly-faithful",
            "annihilator": [[[c, list(a)] for a, c in sorted(f.items())] for f in ann],
            "primes": per}


# -- graded complexes ------------------------------------------------------------

@dataclass
class GradedComplex:
    """Cochain complex of graded free modules P^lo -> ... ; diffs[k][j] is the image
    of basis vector j of P^{lo+k} in P^{lo+k+1}."""

    ring: RingSpec
    lo: int
    shifts: list
    diffs: list

    def __post_init__(self):
        p = self.ring.p
        self.shifts = [tuple(s) for s in self.shifts]
        if len(self.diffs) != max(len(self.shifts) - 1, 0):
            raise GradedError("need one differential between consecutive terms")
        self.diffs = [[clean(v, p) for v in d] for d in self.diffs]
        for k, d in enumerate(self.diffs):
            if len(d) != len(self.shifts[k]):
                raise GradedError(f"differential {k} has {len(d)} columns, expected {len(self.shifts[k])}")
            for j, v in enumerate(d):
                if v and vec_degree(v, self.shifts[k + 1]) != self.shifts[k][j]:
                    raise GradedError(f"differential {k} column {j} is not of degree 0", code="inhomogeneous")

    @property
    def hi(self):
        return self.lo + len(self.shifts) - 1

    def term(self, i):
        k = i - self.lo
        return self.shifts[k] if 0 <= k < len(self.shifts) else ()

    def is_complex(self):
        p = self.ring.p
        for k in range(len(self.diffs) - 1):
            for v in self.diffs[k]:
                if clean(combination(v, self.diffs[k + 1], p), p):
                    return False
        return True

    def cohomology(self, i):
        """H^i as a GradedModule (kernel generators modulo the image)."""
        ring, p, q = self.ring, self.ring.p, self.ring.q
        sh = self.term(i)
        if not sh:
            return GradedModule(ring, (), [])
        k = i - self.lo
        if k < len(self.diffs):
            cols = self.diffs[k]
            syz, _ = syzygies(cols, p, q, self.term(i + 1), list(sh))
            kernel = syz
        else:
            kernel = [{(j, (0,) * q): 1} for j in range(len(sh))]
        image = self.diffs[k - 1] if k > 0 else []
        ring_rel = [poly_vec(f, j) for f in ring_polys(ring) for j in range(len(sh))]
        return subquotient_module(ring, sh, kernel, list(image) + ring_rel)

    def to_json(self):
        return {"ring": self.ring.to_json(), "lo": self.lo, "shifts": [list(s) for s in self.shifts],
                "diffs": [[vec_to_json(v) for v in d] for d in self.diffs]}

    @classmethod
    def from_json(cls, obj):
        ring = RingSpec.from_json(obj["ring"])
        return cls(ring, int(obj.get("lo", 0)), [tuple(s) for s in obj["shifts"]],
                   [[vec_from_json(v, ring.p) for v in d] for d in obj.get("diffs", [])])


def graded_koszul(p, q, subset):
    """Cohomological Koszul complex on the variables in ``subset`` over F_p[x_1..x_q].

    P^k has basis the k-subsets T of ``subset`` in degree l - k, so the top
    cohomology S/(x_i : i in subset) is generated in degree 0.
    """
    subset = sorted(subset)
    ring = graded_ring(p, q)
    l = len(subset)
    layers = [list(combinations(range(l), k)) for k in range(l + 1)]
    index = [{T: n for n, T in enumerate(L)} for L in layers]
    shifts = [tuple([l - k] * len(L)) for k, L in enumerate(layers)]
    diffs = []
    for k in range(l):
        cols = []
        for T in layers[k]:
            v = {}
            for i in range(l):
                if i in T:
                    continue
                sign = -1 if sum(1 for t in T if t < i) % 2 else 1
                U = tuple(sorted(T + (i,)))
                a = tuple(1 if x == subset[i] else 0 for x in range(q))
                v[(index[k + 1][U], a)] = sign % p
            cols.append(v)
        diffs.append(cols)
    return GradedComplex(ring, 0, shifts, diffs)


def check_length_criterion(P: GradedComplex, l0):
    """Codimension of H^*(P) against l0, and the consequences when they are equal."""
    if P.ring.relations:
        raise GradedError("length criterion needs a polynomial ring (no relations)", code="not-regular")
    if not P.is_complex():
        raise GradedError("differentials do not compose to zero", code="not-a-complex")
    nonzero = [P.lo + k for k, s in enumerate(P.shifts) if s]
    if nonzero and (min(nonzero) < 0 or max(nonzero) > l0):
        raise GradedError(f"complex is not concentrated in degrees 0..{l0}", code="degree-window")
    q = P.ring.q
    H = {i: P.cohomology(i) for i in range(0, l0 + 1)}
    dims = {i: H[i].dim_mult()[0] for i in H}
    top_dim = max(dims.values())
    codim = None if top_dim < 0 else q - top_dim
    report = {"l0": l0, "q": q, "codim": codim if codim is not None else "infinite",
              "cohomology_dims": {str(i): dims[i] for i in dims},
              "bound_holds": codim is None or codim <= l0, "equality": codim == l0,
              "conclusions": None}
    if codim == l0:
        lower = all(H[i].is_zero() for i in range(l0))
        rep = depth_pd(H[l0], oracle=False)
        report["conclusions"] = {
            "lower_cohomology_vanishes": lower,
            "resolution_of_top": lower,
            "depth": rep.depth, "proj_dim": rep.proj_dim,
            "depth_is_q_minus_l0": rep.depth == q - l0,
            "pd_is_l0": rep.proj_dim == l0,
        }
        ok = lower and rep.depth == q - l0 and rep.proj_dim == l0
        report["verdict"] = (f"resolution of top cohomology, pd = {rep.proj_dim}, depth = {rep.depth}"
                             if ok else "equality but conclusions fail")
    elif codim is None:
        report["verdict"] = "acyclic: cohomology vanishes, no conclusions"
    else:
        report["verdict"] = f"codim {codim} < l0 = {l0}: no conclusions"
    return report
