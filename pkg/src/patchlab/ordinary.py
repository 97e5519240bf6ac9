"""Fitting decompositions, ordinary parts of complexes and Hecke-style projectors.

For an endomorphism T of a finite module the chain T M ⊇ T^2 M ⊇ ...
stabilizes at some k; T^k M is the summand on which T is invertible and
its complement is the part on which T is nilpotent.  The idempotent cutting
out T^k M is a suitable power of T.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lcm

import numpy as np

from . import linalg
from .complexes import Complex, cohomology_data
from .errors import OperatorError
from .linalg import FiniteModule
from .rings import make_ring


@dataclass
class Operator:
    """Endomorphism of a FiniteModule (one matrix) or a Complex (ring matrix per degree)."""

    target: object
    matrices: list = field(default_factory=list)
    name: str = "T"

    def __post_init__(self):
        if isinstance(self.target, FiniteModule):
            if len(self.matrices) != 1:
                raise OperatorError("a module operator has exactly one matrix")
            A = np.asarray(self.matrices[0], dtype=np.int64).reshape(self.target.rank, self.target.rank)
            self.matrices = [self.target.reduce(A)]
        elif isinstance(self.target, Complex):
            C = self.target
            if len(self.matrices) != len(C.ranks):
                raise OperatorError("need one matrix per degree of the complex")
            mats = []
            for k, r in enumerate(C.ranks):
                A = np.asarray(self.matrices[k], dtype=np.int64)
                if A.shape != (r, r, C.ring.basis_size):
                    raise OperatorError(f"operator in degree {C.lo + k} has shape {A.shape}")
                mats.append(A % C.ring.modulus)
            self.matrices = mats
        else:
            raise OperatorError("operator target must be a FiniteModule or a Complex")

    @property
    def on_module(self):
        return isinstance(self.target, FiniteModule)

    @property
    def matrix(self):
        return self.matrices[0]

    @classmethod
    def identity(cls, target, name="id"):
        if isinstance(target, FiniteModule):
            return cls(target, [target.identity()], name)
        R = target.R
        return cls(target, [R.eye(r) for r in target.ranks], name)

    def compose(self, other: "Operator"):
        """self o other."""
        if other.target is not self.target and not _same_target(self.target, other.target):
            raise OperatorError("operators act on different targets")
        if self.on_module:
            M = self.target
            return Operator(M, [M.compose(self.matrix, other.matrix)], f"{self.name}*{other.name}")
        R = self.target.R
        mats = [R.matmul(a, b) for a, b in zip(self.matrices, other.matrices)]
        return Operator(self.target, mats, f"{self.name}*{other.name}")

    def shifted(self, eta):
        """T - eta for a scalar eta of the coefficient ring."""
        if self.on_module:
            M = self.target
            return Operator(M, [M.reduce(self.matrix - int(eta) * M.identity())], f"({self.name}-{eta})")
        R = self.target.R
        mats = [(A - int(eta) * R.eye(A.shape[0])) % R.mod for A in self.matrices]
        return Operator(self.target, mats, f"({self.name}-{eta})")

    def power(self, n):
        result = Operator.identity(self.target)
        base = self
        while n:
            if n & 1:
                result = result.compose(base)
            base = base.compose(base)
            n >>= 1
        return Operator(self.target, result.matrices, f"{self.name}^n")

    def commutes_with(self, other: "Operator"):
        a, b = self.compose(other), other.compose(self)
        return all(np.array_equal(x, y) for x, y in zip(a.matrices, b.matrices))

    def check(self):
        """Commutation with the ring action (modules) or with the differentials (complexes)."""
        if self.on_module:
            M = self.target
            bad = [n for n, A in sorted(M.actions.items())
                   if not np.array_equal(M.compose(A, self.matrix), M.compose(self.matrix, A))]
            wd = M.check_hom(self.matrix)
            return {"well_defined": wd, "commutes": not bad, "failing": bad}
        C = self.target
        R = C.R
        bad = []
        for k, d in enumerate(C.diffs):
            if not np.array_equal(R.matmul(d, self.matrices[k]), R.matmul(self.matrices[k + 1], d)):
                bad.append(C.lo + k)
        return {"well_defined": True, "commutes": not bad, "failing": bad}

    def require_valid(self):
        rep = self.check()
        if not (rep["well_defined"] and rep["commutes"]):
            what = "ring action" if self.on_module else "differentials in degrees"
            raise OperatorError(f"operator {self.name} does not commute with the {what} {rep['failing']}",
                                code="not-commuting")
        return self

    def to_json(self):
        if self.on_module:
            return {"name": self.name, "matrix": self.matrix.tolist()}
        return {"name": self.name, "matrices": [A.tolist() for A in self.matrices]}


def _same_target(a, b):
    if isinstance(a, FiniteModule) and isinstance(b, FiniteModule):
        return a.p == b.p and a.exps == b.exps
    if isinstance(a, Complex) and isinstance(b, Complex):
        return a == b
    return False


def _ceil_log(p, x):
    s = 0
    while p**s < x:
        s += 1
    return s


def idempotent_exponent(p, rank, pgroup_exp, k):
    """An n >= k with T^n idempotent for every T in a finite endomorphism ring.

    Units of the ring map onto products of GL_r(F_p), r <= rank, with a
    p-group kernel of exponent dividing p^pgroup_exp; element orders divide
    p^s * lcm(p^i - 1, i <= rank).
    """
    s = pgroup_exp + _ceil_log(p, max(rank, 1))
    n = p**s * lcm(*[p**i - 1 for i in range(1, max(rank, 1) + 1)])
    while n < k:
        n *= p
    return n


@dataclass
class FittingResult:
    ordinary: FiniteModule
    nilpotent: FiniteModule
    idempotent: np.ndarray
    k: int
    ord_gens: np.ndarray
    nil_gens: np.ndarray
    T_ordinary: np.ndarray

    def to_json(self):
        return {"ordinary": self.ordinary.to_json(), "nilpotent": self.nilpotent.to_json(),
                "stabilization_index": self.k, "idempotent": self.idempotent.tolist()}


def stabilization_index(M: FiniteModule, T):
    """First k with T^k M = T^{k+1} M."""
    k = 0
    P = M.identity()
    size = M.length
    while True:
        P2 = M.compose(T, P)
        size2 = sum(linalg.image_exps(M, M, P2)) if M.rank else 0
        if size2 == size:
            return k, P
        k, P, size = k + 1, P2, size2


def fitting_decomposition(M: FiniteModule, T) -> FittingResult:
    T = T.matrix if isinstance(T, Operator) else np.asarray(T, dtype=np.int64)
    op = Operator(M, [T])
    op.require_valid()
    T = op.matrix
    k, _ = stabilization_index(M, T)
    n = idempotent_exponent(M.p, M.rank, M.exponent + _ceil_log(M.p, M.rank * M.length + 1), k)
    e = M.power(T, n)
    if not np.array_equal(M.compose(e, e), e):
        raise OperatorError("power of T failed to be idempotent")  # pragma: no cover
    one_minus = M.reduce(M.identity() - e)
    ordS = linalg.submodule(M, e)
    nilS = linalg.submodule(M, one_minus)
    m = max(M.exponent, 1)
    # T on the ordinary summand in its own coordinates
    Tord = ordS.coords(mm_(T, ordS.gens, M.p**m))
    acts = {name: ordS.coords(mm_(A, ordS.gens, M.p**m)) for name, A in M.actions.items()}
    acts_n = {name: nilS.coords(mm_(A, nilS.gens, M.p**m)) for name, A in M.actions.items()}
    ordinary = ordS.module(acts)
    nilpotent = nilS.module(acts_n)
    return FittingResult(ordinary, nilpotent, e, k, ordS.gens, nilS.gens, Tord)


def mm_(a, b, mod):
    return linalg.mm(a, b, mod)


def verify_fitting(M: FiniteModule, T, res: FittingResult):
    """Exact checks of the decomposition; returns a dict of booleans."""
    T = np.asarray(T, dtype=np.int64)
    e = res.idempotent
    out = {}
    out["idempotent"] = bool(np.array_equal(M.compose(e, e), e))
    out["commutes"] = bool(np.array_equal(M.compose(e, T), M.compose(T, e)))
    out["sizes"] = res.ordinary.length + res.nilpotent.length == M.length
    O = res.ordinary
    out["invertible_on_ordinary"] = (O.rank == 0) or linalg.is_isomorphism(O, O, res.T_ordinary)
    # T^length kills the nilpotent summand
    m = max(M.exponent, 1)
    N = M.power(T, max(M.length, 1))
    out["nilpotent_on_complement"] = not np.any(M.reduce(linalg.mm(N, res.nil_gens, M.p**m)))
    _, Tk = stabilization_index(M, T)
    out["ordinary_is_image_of_power"] = tuple(sorted(linalg.image_exps(M, M, Tk), reverse=True)) == O.exps
    out["index_bound"] = res.k <= M.length
    out["ok"] = all(out.values())
    return out


# -- complexes ----------------------------------------------------------------

def _residue_basis_columns(R, E):
    """Columns J and rows I of a ring matrix whose residue minor is invertible."""
    res = R.residue(E) if E.size else np.zeros(E.shape[:2], dtype=np.int64)
    s = linalg.smith(res, R.p, 1, left=False, right=False) if res.size else None
    if s is None or s.rank == 0:
        return [], []
    # greedy column selection preserving rank, then rows
    cols, rows = [], []
    for j in range(res.shape[1]):
        trial = cols + [j]
        if linalg.rank_mod_p(res[:, trial], R.p) == len(trial):
            cols = trial
    sub = res[:, cols]
    for i in range(res.shape[0]):
        trial = rows + [i]
        if linalg.rank_mod_p(sub[trial], R.p) == len(trial):
            rows = trial
        if len(rows) == len(cols):
            break
    return rows, cols


@dataclass
class OrdinaryComplex:
    complex: Complex
    idempotents: list
    inclusion: list  # ring matrices C_T^i -> C^i
    n: int


def ordinary_part_complex(C: Complex, T: Operator) -> OrdinaryComplex:
    if not isinstance(T, Operator) or T.on_module:
        raise OperatorError("ordinary_part_complex needs an operator on the complex")
    T.require_valid()
    R = C.R
    rmax = max(C.ranks + [1])
    n = idempotent_exponent(R.p, rmax, R.m + _ceil_log(R.p, R.m * R.size + 1), rmax * R.m * R.size)
    E = T.power(n)
    for k, e in enumerate(E.matrices):
        if not np.array_equal(R.matmul(e, e), e):
            raise OperatorError(f"power of T failed to be idempotent in degree {C.lo + k}")  # pragma: no cover
    bases, rowsets = [], []
    for e in E.matrices:
        rows, cols = _residue_basis_columns(R, e)
        bases.append(e[:, cols])
        rowsets.append(rows)
    diffs = []
    for k, d in enumerate(C.diffs):
        img = R.matmul(d, bases[k])  # lies in e C^{k+1}
        rows = rowsets[k + 1]
        target = bases[k + 1]
        if not rows:
            diffs.append(np.zeros((0, img.shape[1], R.size), dtype=np.int64))
            continue
        X = R.matmul(R.matinv(target[rows]), img[rows])
        if not np.array_equal(R.matmul(target, X), img):
            raise OperatorError("restricted differential does not factor through the summand")
        diffs.append(X)
    CT = Complex(C.ring, C.lo, [b.shape[1] for b in bases], diffs)
    return OrdinaryComplex(CT, E.matrices, bases, n)


def verify_ordinary_complex(C: Complex, T: Operator, oc: OrdinaryComplex):
    """Compare H^*(C_T) with the Fitting ordinary part of H^*(C), degree by degree.

    The inclusion C_T -> C must induce an injection on cohomology whose image
    is e H^i(C).
    """
    R = C.R
    report = []
    for i in C.degrees():
        k = i - C.lo
        S, H = cohomology_data(C, i, actions=False)
        ST, HT = cohomology_data(oc.complex, i, actions=False)
        if not H.rank:
            report.append({"degree": i, "ok": not HT.rank, "exps": [], "ordinary_exps": []})
            continue
        Tamb = linalg.underlying_abelian(R, T.matrices[k])
        TH = S.induced(Tamb)
        fit = fitting_decomposition(H, TH)
        if HT.rank:
            incl = linalg.underlying_abelian(R, oc.inclusion[k])
            Fi = S.coords(linalg.mm(incl, ST.gens, R.mod))
            injective = linalg.is_injective(HT, H, Fi)
            img = linalg.image_exps(HT, H, Fi)
        else:
            injective, img = True, ()
        ok = (injective and tuple(img) == fit.ordinary.exps and HT.exps == fit.ordinary.exps)
        # the image must be e H itself, not merely isomorphic to it
        if ok and HT.rank:
            both = np.concatenate([Fi, fit.ord_gens], axis=1)
            ok = linalg.submodule(H, both).exps == fit.ordinary.exps
        report.append({"degree": i, "ok": bool(ok), "exps": list(HT.exps), "ordinary_exps": list(fit.ordinary.exps)})
    return {"ok": all(r["ok"] for r in report), "degrees": report}


def localization_projector(ops, pis, target=None) -> Operator:
    """prod(pi) o prod(T - eta) for commuting operators; identity when both lists are empty."""
    family = [T.shifted(eta) for T, eta in ops] + list(pis)
    if target is None:
        if not family:
            raise OperatorError("empty operator family needs an explicit target")
        target = family[0].target
    everything = [T for T, _ in ops] + list(pis)
    for a in range(len(everything)):
        for b in range(a + 1, len(everything)):
            if not everything[a].commutes_with(everything[b]):
                raise OperatorError(f"operators {everything[a].name} and {everything[b].name} do not commute",
                                    code="not-commuting")
    result = Operator.identity(target, "projector")
    for op in reversed(family):
        result = op.compose(result)
    result.name = "projector"
    return result
