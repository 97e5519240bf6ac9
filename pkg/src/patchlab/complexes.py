"""Bounded complexes of finite free modules over finite local rings.

A complex is stored cohomologically: ``diffs[k]`` maps degree ``lo + k`` to
``lo + k + 1`` and is a ring matrix of shape (rank_{k+1}, rank_k, basis).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import ComplexError, RingError
from .linalg import FiniteModule, Subquotient, mm
from .rings import RingMap, RingSpec, augment, make_ring, mod_power


def ring_matrix_to_json(d):
    d = np.asarray(d)
    return {"rows": int(d.shape[0]), "cols": int(d.shape[1]),
            "entries": [[[int(c) for c in e] for e in row] for row in d]}


def ring_matrix_from_json(obj, spec: RingSpec):
    rows, cols = int(obj["rows"]), int(obj["cols"])
    B = spec.basis_size
    d = np.zeros((rows, cols, B), dtype=np.int64)
    entries = obj.get("entries", [])
    if len(entries) != rows or any(len(r) != cols for r in entries):
        raise ComplexError(f"matrix entries do not match the declared {rows}x{cols} shape")
    for i, row in enumerate(entries):
        for j, e in enumerate(row):
            e = [e] if isinstance(e, int) else list(e)
            if len(e) > B:
                raise ComplexError(f"entry ({i},{j}) has {len(e)} coefficients for basis size {B}")
            d[i, j, : len(e)] = e
    return d % spec.modulus


@dataclass
class Complex:
    ring: RingSpec
    lo: int
    ranks: list
    diffs: list = field(default_factory=list)

    def __post_init__(self):
        if self.ring.graded:
            raise ComplexError("complexes over graded quotients live in patchlab.graded")
        self.ranks = [int(r) for r in self.ranks]
        B = self.ring.basis_size
        if not self.diffs:
            self.diffs = [np.zeros((self.ranks[k + 1], self.ranks[k], B), dtype=np.int64)
                          for k in range(len(self.ranks) - 1)]
        self.diffs = [np.asarray(d, dtype=np.int64) % self.ring.modulus for d in self.diffs]
        if len(self.diffs) != max(len(self.ranks) - 1, 0):
            raise ComplexError("need one differential between consecutive degrees")
        for k, d in enumerate(self.diffs):
            if d.shape != (self.ranks[k + 1], self.ranks[k], B):
                raise ComplexError(f"differential in degree {self.lo + k} has shape {d.shape}, "
                                   f"expected {(self.ranks[k + 1], self.ranks[k], B)}")

    @property
    def hi(self):
        return self.lo + len(self.ranks) - 1

    @property
    def R(self):
        return make_ring(self.ring)

    def rank(self, i):
        k = i - self.lo
        return self.ranks[k] if 0 <= k < len(self.ranks) else 0

    def diff(self, i):
        """d^i as a ring matrix (zero-size at the ends)."""
        k = i - self.lo
        if 0 <= k < len(self.diffs):
            return self.diffs[k]
        return np.zeros((self.rank(i + 1), self.rank(i), self.ring.basis_size), dtype=np.int64)

    def degrees(self):
        return range(self.lo, self.hi + 1)

    def euler_characteristic(self):
        return sum((-1) ** i * self.rank(i) for i in self.degrees())

    def copy(self):
        return Complex(self.ring, self.lo, list(self.ranks), [d.copy() for d in self.diffs])

    def __eq__(self, other):
        return (isinstance(other, Complex) and self.ring == other.ring and self.lo == other.lo
                and self.ranks == other.ranks
                and all(np.array_equal(a, b) for a, b in zip(self.diffs, other.diffs)))

    def to_json(self):
        return {"ring": self.ring.to_json(), "lo": self.lo, "ranks": list(self.ranks),
                "diffs": [ring_matrix_to_json(d) for d in self.diffs]}

    @classmethod
    def from_json(cls, obj):
        spec = RingSpec.from_json(obj["ring"])
        ranks = [int(r) for r in obj["ranks"]]
        diffs = [ring_matrix_from_json(d, spec) for d in obj.get("diffs", [])]
        if not diffs:
            diffs = None
        return cls(spec, int(obj.get("lo", 0)), ranks, diffs or [])


def single_module(spec, rank=1, degree=0):
    return Complex(spec, degree, [rank])


def two_term(spec, x, lo=0):
    """[R --x--> R] for a ring element array x."""
    x = np.asarray(x, dtype=np.int64).reshape(1, 1, -1)
    return Complex(spec, lo, [1, 1], [x])


def koszul(spec, elements, lo=0):
    """Koszul cochain complex on the given ring elements (exterior powers, lo..lo+n)."""
    R = make_ring(spec)
    n = len(elements)
    subsets = [list(itertools.combinations(range(n), k)) for k in range(n + 1)]
    diffs = []
    for k in range(n):
        src, dst = subsets[k], subsets[k + 1]
        d = np.zeros((len(dst), len(src), R.size), dtype=np.int64)
        index = {s: i for i, s in enumerate(src)}
        for r, T in enumerate(dst):
            for pos, a in enumerate(T):
                S = T[:pos] + T[pos + 1:]
                sign = -1 if pos % 2 else 1
                d[r, index[S]] = (sign * np.asarray(elements[a])) % R.mod
        diffs.append(d)
    return Complex(spec, lo, [len(s) for s in subsets], diffs)


def check_complex(C: Complex):
    """Report every degree where d^{i+1} d^i fails to vanish."""
    R = C.R
    failures = []
    for k in range(len(C.diffs) - 1):
        comp = R.matmul(C.diffs[k + 1], C.diffs[k])
        if np.any(comp):
            bad = np.argwhere(np.any(comp != 0, axis=2))
            failures.append({"degree": C.lo + k, "entries": [[int(a), int(b)] for a, b in bad[:5]]})
    return {"valid": not failures, "failures": failures}


def require_valid(C: Complex, name="complex"):
    rep = check_complex(C)
    if not rep["valid"]:
        deg = rep["failures"][0]["degree"]
        raise ComplexError(f"{name}: d∘d != 0 starting in degree {deg}", code="not-a-complex")
    return C


def base_change(C: Complex, f: RingMap):
    if f.src != C.ring:
        raise RingError(f"map source {f.src.to_json()} does not match complex ring {C.ring.to_json()}")
    return Complex(f.dst, C.lo, list(C.ranks), [f.apply_array(d) for d in C.diffs])


def residue_field_map(spec):
    """Composite R -> F_p killing the maximal ideal."""
    f = augment(spec) if spec.q else None
    src = f.dst if f else spec
    if src.j:
        from .rings import kill_vars
        g = kill_vars(src)
        f = f.then(g) if f else g
        src = g.dst
    if src.m > 1:
        g = mod_power(src, 1)
        f = f.then(g) if f else g
    return f


def residual(C: Complex):
    f = residue_field_map(C.ring)
    return base_change(C, f) if f else C


def residual_ranks(C: Complex):
    """dim_k H^n(C (x) R/m) for every degree of C."""
    Ck = residual(C)
    p = C.ring.p
    rk = [linalg.rank_mod_p(d[:, :, 0], p) for d in Ck.diffs]
    out = []
    for k, r in enumerate(Ck.ranks):
        into = rk[k - 1] if k > 0 else 0
        outof = rk[k] if k < len(rk) else 0
        out.append(r - into - outof)
    return out


def underlying_diff(C: Complex, i):
    return linalg.underlying_abelian(C.R, C.diff(i))


def generator_action(R, name, rank):
    return linalg.block_diag_action(R, R.generator(name), rank)


def cohomology_data(C: Complex, i, actions=True):
    """(Subquotient, FiniteModule) for H^i(C) over Z/p^m."""
    R = C.R
    n = C.rank(i) * R.size
    A = underlying_diff(C, i - 1) if C.rank(i - 1) else np.zeros((n, 0), dtype=np.int64)
    B = underlying_diff(C, i) if C.rank(i + 1) else np.zeros((0, n), dtype=np.int64)
    S = Subquotient(A, B, R.p, R.m)
    acts = {}
    if actions and S.exps:
        for name in R.generator_names():
            acts[name] = S.induced(generator_action(R, name, C.rank(i)))
    return S, S.module(acts)


def cohomology(C: Complex, i, actions=True) -> FiniteModule:
    if not C.lo <= i <= C.hi:
        return FiniteModule(C.ring.p, ())
    if not actions and C.ring.m == 1:
        # over F_p only the dimension matters; ranks are much cheaper than SNF with transforms
        return FiniteModule(C.ring.p, (1,) * _field_dimension(C, i))
    return cohomology_data(C, i, actions)[1]


def _field_dimension(C: Complex, i):
    R = C.R
    n = C.rank(i) * R.size
    ra = linalg.rank_mod_p(underlying_diff(C, i - 1), R.p) if C.rank(i - 1) else 0
    rb = linalg.rank_mod_p(underlying_diff(C, i), R.p) if C.rank(i + 1) else 0
    return n - ra - rb


@dataclass
class MinimalityCertificate:
    ranks: list
    flags: list

    @property
    def minimal(self):
        return all(self.flags)

    def to_json(self):
        return {"ranks": list(self.ranks), "flags": list(self.flags), "minimal": self.minimal}


def certificate(C: Complex):
    R = C.R
    flags = []
    for d in C.diffs:
        res = R.residue(d.reshape(-1, R.size)) if d.size else np.zeros(0)
        flags.append(not np.any(res))
    return MinimalityCertificate(list(C.ranks), flags)


@dataclass
class Minimization:
    complex: Complex
    certificate: MinimalityCertificate
    f: list  # original -> minimal, one ring matrix per degree
    g: list  # minimal -> original
    kept: list  # indices of original basis vectors kept in each degree

    def __iter__(self):
        # lets callers write ``Cmin, cert = minimize(C)``
        return iter((self.complex, self.certificate))


def _first_unit(R, diffs):
    for k, d in enumerate(diffs):
        if not d.size:
            continue
        res = R.residue(d)
        hits = np.argwhere(res != 0)
        if hits.size:
            r, c = hits[0]
            return k, int(r), int(c)
    return None


def minimize(C: Complex, track=True) -> Minimization:
    """Split off contractible summands R --u--> R until no unit entries remain.

    Pivots are chosen by scanning degrees ascending and entries in row-major
    order, so the output is a deterministic function of the input matrices.
    """
    R = C.R
    mod = R.mod
    diffs = [d.copy() for d in C.diffs]
    ranks = list(C.ranks)
    kept = [list(range(r)) for r in ranks]
    eye = lambda n: (np.eye(n, dtype=np.int64)[:, :, None] * R.one()[None, None, :])
    f = [eye(r) for r in ranks] if track else None
    g = [eye(r) for r in ranks] if track else None
    while True:
        hit = _first_unit(R, diffs)
        if hit is None:
            break
        k, r, c = hit
        d = diffs[k]
        uinv = R.inverse(d[r, c])
        rows = [i for i in range(d.shape[0]) if i != r]
        cols = [j for j in range(d.shape[1]) if j != c]
        gamma = d[rows][:, [c]]
        delta = d[[r]][:, cols]
        eps = d[rows][:, cols]
        ud = R.mul(uinv[None, None, :], delta)
        new = (eps - R.matmul(gamma, ud)) % mod
        if track:
            # g^k: reduced -> original, row c becomes -u^{-1} delta
            gk = np.zeros((ranks[k], ranks[k] - 1, R.size), dtype=np.int64)
            gk[cols, np.arange(len(cols))] = R.one()
            gk[c] = (-ud[0]) % mod
            g[k] = R.matmul(g[k], gk)
            gk1 = np.zeros((ranks[k + 1], ranks[k + 1] - 1, R.size), dtype=np.int64)
            gk1[rows, np.arange(len(rows))] = R.one()
            g[k + 1] = R.matmul(g[k + 1], gk1)
            # f^{k+1}: original -> reduced, column r becomes -gamma u^{-1}
            fk1 = np.zeros((ranks[k + 1] - 1, ranks[k + 1], R.size), dtype=np.int64)
            fk1[np.arange(len(rows)), rows] = R.one()
            fk1[:, r] = (-R.mul(gamma[:, 0], uinv[None, :])) % mod
            f[k + 1] = R.matmul(fk1, f[k + 1])
            fk = np.zeros((ranks[k] - 1, ranks[k], R.size), dtype=np.int64)
            fk[np.arange(len(cols)), cols] = R.one()
            f[k] = R.matmul(fk, f[k])
        diffs[k] = new
        if k > 0:
            diffs[k - 1] = np.delete(diffs[k - 1], c, axis=0)
        if k + 1 < len(diffs):
            diffs[k + 1] = np.delete(diffs[k + 1], r, axis=1)
        ranks[k] -= 1
        ranks[k + 1] -= 1
        del kept[k][c]
        del kept[k + 1][r]
    out = Complex(C.ring, C.lo, ranks, diffs)
    return Minimization(out, certificate(out), f, g, kept)


def is_minimal(C: Complex):
    return certificate(C).minimal


# -- comparing cohomology ---------------------------------------------------

ENUMERATION_CAP = 1 << 12
HOM_ENUMERATION_CAP = 1 << 16


def _batched_rank_mod_p(S, p):
    """Ranks of a stack of matrices over F_p, shape (K, r, c)."""
    S = np.array(S, dtype=np.int64) % p
    K, r, c = S.shape
    rank = np.zeros(K, dtype=np.int64)
    used = np.zeros((K, r), dtype=bool)
    inv = np.array([0] + [pow(a, -1, p) for a in range(1, p)], dtype=np.int64)
    ar = np.arange(K)
    for col in range(c):
        cand = (S[:, :, col] != 0) & ~used
        has = cand.any(axis=1)
        piv = np.argmax(cand, axis=1)
        prow = S[ar, piv]  # (K, c)
        scale = inv[prow[:, col]]
        prow = (prow * scale[:, None]) % p
        factors = np.where(has[:, None], S[:, :, col], 0)
        factors[ar, piv] = np.where(has, 0, factors[ar, piv])
        S = (S - factors[:, :, None] * prow[:, None, :]) % p
        used[ar[has], piv[has]] = True
        rank += has
    return rank


def _hom_module_generators(H1: FiniteModule, H2: FiniteModule):
    """Coordinates of Hom_Z(H1, H2) and the kernel cut out by equivariance."""
    p = H1.p
    r1, r2 = H1.rank, H2.rank
    pairs = [(i, j) for i in range(r2) for j in range(r1)]
    hexps = [min(H1.exps[j], H2.exps[i]) for i, j in pairs]
    shift = np.array([max(0, H2.exps[i] - H1.exps[j]) for i, j in pairs], dtype=np.int64)
    names = sorted(set(H1.actions) & set(H2.actions))
    big = p ** max(H1.exps + H2.exps)
    # equivariance F A1 - A2 F, one block of H2^{r1} per generator
    cols = []
    for idx, (i, j) in enumerate(pairs):
        F = np.zeros((r2, r1), dtype=np.int64)
        F[i, j] = p ** int(shift[idx])
        parts = [(mm(F, H1.actions[n], big) - mm(H2.actions[n], F, big)).T.reshape(-1) for n in names]
        cols.append(np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64))
    tgt = [e for _ in names for _ in range(r1) for e in H2.exps]
    Phi = np.stack(cols, axis=1) if cols else np.zeros((len(tgt), 0), dtype=np.int64)
    K = linalg.kernel_between(p, hexps, tgt, Phi)
    return pairs, shift, K


def _socle_matrices(H1, H2, Fs):
    p = H1.p
    e1 = np.array(H1.exps, dtype=np.int64)
    e2 = np.array(H2.exps, dtype=np.int64)
    lift = Fs * (p ** (e1 - 1))[None, None, :]
    lift = lift % (p**e2)[None, :, None]
    return (lift // (p ** (e2 - 1))[None, :, None]) % p


def _homs_from_coords(H1, H2, pairs, shift, coords):
    p = H1.p
    K = coords.shape[0]
    Fs = np.zeros((K, H2.rank, H1.rank), dtype=np.int64)
    for idx, (i, j) in enumerate(pairs):
        Fs[:, i, j] = (coords[:, idx] * p ** int(shift[idx])) % p ** H2.exps[i]
    return Fs


def find_isomorphism(H1: FiniteModule, H2: FiniteModule, rng=None, samples=4096):
    """Search Hom_R(H1, H2) for a bijection.

    Returns (F or None, exhaustive flag).  Enumeration is exhaustive when the
    equivariant Hom group has at most HOM_ENUMERATION_CAP elements; otherwise
    random elements are sampled and a failed search is not a proof.
    """
    if H1.exps != H2.exps:
        return None, True
    if H1.rank == 0:
        return np.zeros((0, 0), dtype=np.int64), True
    p = H1.p
    pairs, shift, K = _hom_module_generators(H1, H2)
    gens = K.gens  # columns in Hom_Z coordinates
    exps = K.exps
    total = p ** sum(exps)
    mods = np.array([p ** min(H1.exps[j], H2.exps[i]) for i, j in pairs], dtype=np.int64)

    def test(coeffs):
        coords = (coeffs @ gens.T) % mods[None, :]
        Fs = _homs_from_coords(H1, H2, pairs, shift, coords)
        ok = _batched_rank_mod_p(_socle_matrices(H1, H2, Fs), p) == H1.rank
        hits = np.flatnonzero(ok)
        return Fs[hits[0]] if hits.size else None

    if total <= HOM_ENUMERATION_CAP:
        ranges = [np.arange(p**e) for e in exps]
        grid = np.array(np.meshgrid(*ranges, indexing="ij")).reshape(len(exps), -1).T if exps else np.zeros((1, 0), dtype=np.int64)
        for start in range(0, grid.shape[0], 8192):
            F = test(grid[start:start + 8192])
            if F is not None:
                return F, True
        return None, True
    rng = rng or np.random.default_rng(0)
    coeffs = np.stack([rng.integers(0, p**e, samples) for e in exps], axis=1)
    return test(coeffs), False


def invariant_battery(H: FiniteModule):
    """Image/kernel invariant factors of g-1 (group and variable generators) and of pi."""
    out = {}
    I = H.identity()
    for name, A in sorted(H.actions.items()):
        op = A if name in ("pi",) or name.startswith("z") else (A - I)
        op = H.reduce(op)
        out[name] = {"image": list(linalg.image_exps(H, H, op)),
                     "kernel": list(linalg.hom_kernel(H, H, op).exps)}
    return out


def compare_modules(H1: FiniteModule, H2: FiniteModule):
    """Verdict in {isomorphic, equivalent-invariants, distinct} plus the tier used."""
    if H1.exps != H2.exps:
        return {"verdict": "distinct", "tier": "invariant-factors"}
    if H1.order <= ENUMERATION_CAP:
        F, exhaustive = find_isomorphism(H1, H2)
        if F is not None:
            return {"verdict": "isomorphic", "tier": "equivariant-search",
                    "isomorphism": F.tolist()}
        if exhaustive:
            return {"verdict": "distinct", "tier": "equivariant-search"}
    if invariant_battery(H1) == invariant_battery(H2):
        return {"verdict": "equivalent-invariants", "tier": "invariant-battery"}
    return {"verdict": "distinct", "tier": "invariant-battery"}


def same_homology(C1: Complex, C2: Complex):
    if C1.ring != C2.ring:
        raise RingError("same_homology needs complexes over the same ring")
    lo = min(C1.lo, C2.lo)
    hi = max(C1.hi, C2.hi)
    degrees = []
    rank = {"isomorphic": 0, "equivalent-invariants": 1, "distinct": 2}
    worst = "isomorphic"
    for i in range(lo, hi + 1):
        H1, H2 = cohomology(C1, i), cohomology(C2, i)
        cmp = compare_modules(H1, H2)
        cmp.pop("isomorphism", None)
        degrees.append({"degree": i, "exps1": list(H1.exps), "exps2": list(H2.exps), **cmp})
        if rank[cmp["verdict"]] > rank[worst]:
            worst = cmp["verdict"]
    return {"verdict": worst, "degrees": degrees}
