"""Exact linear algebra over chain rings Z/p^m.

The workhorse is :func:`smith`, a Smith normal form by valuation pivoting:
at level v every unused entry has p-adic valuation >= v, so any entry of
valuation exactly v is a legal pivot and its unit part is invertible.  All
module computations (cohomology, kernels, quotients, submodules) reduce to
:func:`subquotient`, which presents ``ker B / im A`` in invariant-factor
coordinates together with a coordinate map for cycles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import RingError
from .rings import Ring, RingSpec, make_ring


def mm(a, b, mod):
    """Matrix product reduced mod ``mod`` without int64 overflow."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    inner = a.shape[-1] if a.ndim else 1
    if inner == 0:
        return np.zeros(a.shape[:-1] + b.shape[1:], dtype=np.int64)
    bound = mod * mod * inner
    if bound < (1 << 52):
        # float64 BLAS is exact below 2^53
        out = a.astype(np.float64) @ b.astype(np.float64)
        return out.astype(np.int64) % mod
    if bound < (1 << 62):
        return (a @ b) % mod
    out = a.astype(object) @ b.astype(object)
    return (out % mod).astype(np.int64)


def valuation(x, p, m):
    """p-adic valuation of an integer in Z/p^m (m for zero)."""
    x = int(x) % p**m
    if x == 0:
        return m
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


@dataclass
class SNF:
    """Result of :func:`smith`: ``U @ A @ V == diag(p**vals) (+ zero block)``."""

    p: int
    m: int
    shape: tuple
    vals: list
    U: np.ndarray | None = None
    Uinv: np.ndarray | None = None
    V: np.ndarray | None = None
    Vinv: np.ndarray | None = None

    @property
    def rank(self):
        return len(self.vals)

    def diagonal(self):
        D = np.zeros(self.shape, dtype=np.int64)
        for k, v in enumerate(self.vals):
            D[k, k] = self.p**v
        return D


def smith(A, p, m, left=True, right=True):
    """Smith normal form of ``A`` over Z/p^m.

    ``left``/``right`` control whether U (and its inverse) and V (and its
    inverse) are accumulated; skipping them is much cheaper when only the
    invariant factors or one side are needed.
    """
    mod = p**m
    A = np.array(A, dtype=np.int64) % mod
    r, c = A.shape
    n = max(r, c)
    dense = np.count_nonzero(A) > 8 * (r + c)
    if dense and r * c > 2500 and mod * mod * n < (1 << 50):
        return _smith_blocked(A, p, m, left, right)
    return _smith_direct(A, p, m, left, right)


def _finish(p, m, shape, pivots, row_free, col_free, U, Uinv, V, Vinv):
    rows = [pv[0] for pv in pivots] + list(np.flatnonzero(row_free))
    cols = [pv[1] for pv in pivots] + list(np.flatnonzero(col_free))
    res = SNF(p, m, shape, [pv[2] for pv in pivots])
    if U is not None:
        res.U = U[rows]
        res.Uinv = Uinv[:, rows]
    if V is not None:
        res.V = V[:, cols]
        res.Vinv = Vinv[cols]
    return res


class _Lazy:
    """Matrix X kept as X0 - L @ R with rank-1 updates flushed in blocks.

    Everything is float64 holding exact integers: the caller guarantees
    mod^2 * size < 2^50, so BLAS products never round.
    """

    def __init__(self, X, mod, block=48):
        self.X = np.asarray(X, dtype=np.float64)
        self.mod = float(mod)
        n, c = X.shape
        self.L = np.zeros((n, block))
        self.R = np.zeros((block, c))
        self.t = 0
        self.block = block

    def col(self, j):
        t = self.t
        return (self.X[:, j] - self.L[:, :t] @ self.R[:t, j]) % self.mod

    def row(self, i):
        t = self.t
        return (self.X[i] - self.L[i, :t] @ self.R[:t]) % self.mod

    def matvec(self, v):
        t = self.t
        return (self.X @ v - self.L[:, :t] @ (self.R[:t] @ v)) % self.mod

    def vecmat(self, w):
        t = self.t
        return (w @ self.X - (w @ self.L[:, :t]) @ self.R[:t]) % self.mod

    def update(self, a, b):
        """X <- X - a b^T."""
        self.L[:, self.t] = a % self.mod
        self.R[self.t] = b % self.mod
        self.t += 1
        if self.t == self.block:
            self.flush()

    def flush(self):
        if self.t:
            t = self.t
            self.X = (self.X - self.L[:, :t] @ self.R[:t]) % self.mod
            self.t = 0
        return self.X.astype(np.int64)


def _smith_blocked(A, p, m, left, right):
    mod = p**m
    r, c = A.shape
    LA = _Lazy(A, mod)
    LU = _Lazy(np.eye(r, dtype=np.int64), mod) if left else None
    LUi = _Lazy(np.eye(r, dtype=np.int64), mod) if left else None
    LV = _Lazy(np.eye(c, dtype=np.int64), mod) if right else None
    LVi = _Lazy(np.eye(c, dtype=np.int64), mod) if right else None
    row_free = np.ones(r, dtype=bool)
    col_free = np.ones(c, dtype=bool)
    pivots = []
    for v in range(m):
        pv = p**v
        pnext = pv * p
        for col in range(c):
            if not col_free[col] or not row_free.any():
                continue
            colvec = LA.col(col)
            cand = np.flatnonzero(row_free & (colvec % pnext != 0))
            if cand.size == 0:
                continue
            row = int(cand[0])
            u = int(colvec[row]) // pv
            uinv = pow(u, -1, mod)
            prow = (LA.row(row) * uinv) % mod
            f = np.where(row_free, colvec // pv, 0.0)
            f[row] = 0
            LA.update(f, prow)
            g = np.where(col_free, prow // pv, 0.0)
            g[col] = 0
            if left:
                e = np.zeros(r)
                e[row] = 1
                urow = LU.row(row)
                LU.update(f * uinv + (1 - uinv) * e, urow)
                crow = LUi.col(row)
                LUi.update((1 - u) * crow - LUi.matvec(f), e)
            if right and g.any():
                e = np.zeros(c)
                e[col] = 1
                LV.update(LV.col(col), g)
                LVi.update(e, -LVi.vecmat(g))
            row_free[row] = False
            col_free[col] = False
            pivots.append((row, col, v))
    U = LU.flush() if left else None
    Uinv = LUi.flush() if left else None
    V = LV.flush() if right else None
    Vinv = LVi.flush() if right else None
    return _finish(p, m, (r, c), pivots, row_free, col_free, U, Uinv, V, Vinv)


def _smith_direct(A, p, m, left, right):
    mod = p**m
    r, c = A.shape
    U = np.eye(r, dtype=np.int64) if left else None
    Uinv = np.eye(r, dtype=np.int64) if left else None
    V = np.eye(c, dtype=np.int64) if right else None
    Vinv = np.eye(c, dtype=np.int64) if right else None
    row_free = np.ones(r, dtype=bool)
    col_free = np.ones(c, dtype=bool)
    pivots = []
    for v in range(m):
        pv = p**v
        pnext = pv * p
        for col in range(c):
            if not col_free[col]:
                continue
            cand = np.flatnonzero(row_free & (A[:, col] % pnext != 0))
            if cand.size == 0:
                continue
            row = int(cand[0])
            u = int(A[row, col]) // pv
            uinv = pow(u, -1, mod)
            A[row] = (A[row] * uinv) % mod
            if left:
                U[row] = (U[row] * uinv) % mod
                Uinv[:, row] = (Uinv[:, row] * u) % mod
            # clear the pivot column with row operations
            others = np.flatnonzero(A[:, col])
            others = others[others != row]
            if others.size:
                f = A[others, col] // pv
                A[others] = (A[others] - f[:, None] * A[row]) % mod
                if left:
                    U[others] = (U[others] - f[:, None] * U[row]) % mod
                    Uinv[:, row] = (Uinv[:, row] + mm(Uinv[:, others], f, mod)) % mod
            # clear the pivot row with column operations
            others = np.flatnonzero(A[row])
            others = others[others != col]
            if others.size:
                g = A[row, others] // pv
                A[row, others] = 0
                if right:
                    V[:, others] = (V[:, others] - V[:, col][:, None] * g) % mod
                    Vinv[col] = (Vinv[col] + mm(g, Vinv[others], mod)) % mod
            row_free[row] = False
            col_free[col] = False
            pivots.append((row, col, v))
    return _finish(p, m, (r, c), pivots, row_free, col_free, U, Uinv, V, Vinv)


def rank_mod_p(A, p):
    A = np.asarray(A, dtype=np.int64)
    if A.size == 0:
        return 0
    return smith(A, p, 1, left=False, right=False).rank


def kernel_generators(B, p, m):
    """Columns generating ker(B) over Z/p^m."""
    B = np.asarray(B, dtype=np.int64)
    n = B.shape[1]
    if B.shape[0] == 0 or not np.any(B % p**m):
        return np.eye(n, dtype=np.int64)
    s = smith(B, p, m, left=False, right=True)
    cols, scale = [], []
    for k, v in enumerate(s.vals):
        if v > 0:
            cols.append(k)
            scale.append(p ** (m - v))
    cols += list(range(s.rank, n))
    scale += [1] * (n - s.rank)
    return (s.V[:, cols] * np.array(scale, dtype=np.int64)[None, :]) % p**m


def columns_in_span(cols, X, p, m):
    """Which columns of X lie in the Z/p^m-span of ``cols`` (boolean array)."""
    mod = p**m
    X = np.asarray(X, dtype=np.int64) % mod
    cols = np.asarray(cols, dtype=np.int64)
    if cols.size == 0 or not np.any(cols % mod):
        return ~np.any(X, axis=0)
    s = smith(cols, p, m, left=True, right=False)
    Y = mm(s.U, X, mod)
    ok = ~np.any(Y[s.rank:], axis=0)
    for k, v in enumerate(s.vals):
        ok &= (Y[k] % p**v) == 0
    return ok


def in_column_span(cols, x, p, m):
    """Is ``x`` a Z/p^m-combination of the columns of ``cols``?"""
    mod = p**m
    cols = np.asarray(cols, dtype=np.int64)
    x = np.asarray(x, dtype=np.int64) % mod
    s = smith(cols, p, m, left=True, right=False)
    y = mm(s.U, x, mod)
    for k, v in enumerate(s.vals):
        if y[k] % p**v:
            return False
    return not np.any(y[s.rank:])


@dataclass(frozen=True)
class Matrix:
    """Dense matrix over a chain ring or prime field."""

    ring: RingSpec
    entries: np.ndarray = field(compare=False)

    def __post_init__(self):
        if self.ring.graded or self.ring.basis_size != 1:
            raise RingError("Matrix entries must lie in a chain ring or prime field")
        arr = np.array(self.entries, dtype=np.int64).reshape(np.shape(self.entries)) % self.ring.modulus
        if arr.ndim != 2:
            raise RingError("Matrix entries must be two-dimensional")
        object.__setattr__(self, "entries", arr)

    @property
    def rows(self):
        return self.entries.shape[0]

    @property
    def cols(self):
        return self.entries.shape[1]

    def __eq__(self, other):
        return (isinstance(other, Matrix) and self.ring == other.ring
                and np.array_equal(self.entries, other.entries))

    def __matmul__(self, other):
        if self.ring != other.ring:
            raise RingError("ring mismatch")
        return Matrix(self.ring, mm(self.entries, other.entries, self.ring.modulus))

    def to_json(self):
        return {"ring": self.ring.to_json(), "rows": self.rows, "cols": self.cols,
                "entries": [[[int(x)] for x in row] for row in self.entries]}

    @classmethod
    def from_json(cls, obj):
        ring = RingSpec.from_json(obj["ring"])
        rows, cols = int(obj["rows"]), int(obj["cols"])
        data = [[x[0] if isinstance(x, list) else x for x in row] for row in obj["entries"]]
        arr = np.array(data, dtype=np.int64).reshape(rows, cols)
        return cls(ring, arr)


def smith_normal_form(A: Matrix):
    """Return (U, D, V) with U A V = D; D diagonal p-powers in divisibility order."""
    p, m = A.ring.p, A.ring.m
    s = smith(A.entries, p, m)
    return Matrix(A.ring, s.U), Matrix(A.ring, s.diagonal()), Matrix(A.ring, s.V)


def is_invertible(M: Matrix):
    if M.rows != M.cols:
        return False
    return rank_mod_p(M.entries % M.ring.p, M.ring.p) == M.rows


@dataclass
class FiniteModule:
    """Finite abelian p-group ``(+) Z/p^{e_i}`` with named endomorphisms.

    Elements are integer coordinate vectors, entry i read mod p^{e_i}.
    ``actions`` maps generator names (pi, g1, z1, ...) to matrices in these
    coordinates; column j is the image of the j-th generator.
    """

    p: int
    exps: tuple
    actions: dict = field(default_factory=dict)

    def __post_init__(self):
        self.exps = tuple(int(e) for e in self.exps)
        if any(e < 1 for e in self.exps):
            raise RingError("invariant factor exponents must be positive")
        if list(self.exps) != sorted(self.exps, reverse=True):
            raise RingError("invariant factors must be listed in descending order")

    @property
    def rank(self):
        return len(self.exps)

    @property
    def length(self):
        """log_p of the order."""
        return sum(self.exps)

    @property
    def order(self):
        return self.p**self.length

    @property
    def exponent(self):
        return max(self.exps, default=0)

    def invariant_factors(self):
        return [self.p**e for e in self.exps]

    def reduce(self, x):
        """Reduce coordinate columns (vector or matrix) mod p^{e_i} rowwise."""
        x = np.asarray(x, dtype=np.int64)
        mods = np.array([self.p**e for e in self.exps], dtype=np.int64)
        if x.ndim == 1:
            return x % mods
        return x % mods[:, None]

    def identity(self):
        return np.eye(self.rank, dtype=np.int64)

    def relation_matrix(self, m=None):
        m = self.exponent if m is None else m
        return np.diag([self.p**e % self.p**m for e in self.exps]).astype(np.int64).reshape(self.rank, self.rank)

    def is_zero(self):
        return self.rank == 0

    def check_hom(self, F, target=None):
        """Does F define a homomorphism self -> target (well defined on orders)?"""
        target = self if target is None else target
        F = np.asarray(F, dtype=np.int64)
        for jj, ej in enumerate(self.exps):
            for ii, ei in enumerate(target.exps):
                if ei > ej and F[ii, jj] % self.p ** (ei - ej):
                    return False
        return True

    def check_actions(self):
        """Well-definedness and pairwise commutation of the action matrices."""
        mats = list(self.actions.values())
        for A in mats:
            if not self.check_hom(A):
                return False
        for a in range(len(mats)):
            for b in range(a + 1, len(mats)):
                if not np.array_equal(self.compose(mats[a], mats[b]), self.compose(mats[b], mats[a])):
                    return False
        return True

    def compose(self, F, G):
        """F o G for endomorphisms in coordinates."""
        mod = self.p ** max(self.exponent, 1)
        return self.reduce(mm(F, G, mod))

    def power(self, F, k):
        R = self.identity()
        B = np.asarray(F, dtype=np.int64)
        while k:
            if k & 1:
                R = self.compose(R, B)
            B = self.compose(B, B)
            k >>= 1
        return R

    def to_json(self):
        return {"p": self.p, "exps": list(self.exps),
                "invariant_factors": [self.p**e for e in self.exps],
                "actions": {k: np.asarray(v).tolist() for k, v in sorted(self.actions.items())}}

    @classmethod
    def from_json(cls, obj):
        acts = {k: np.array(v, dtype=np.int64).reshape(len(obj["exps"]), len(obj["exps"]))
                for k, v in obj.get("actions", {}).items()}
        return cls(int(obj["p"]), tuple(obj["exps"]), acts)


class Subquotient:
    """``ker B / im A`` for Z/p^m matrices with ``B @ A == 0``.

    ``gens`` holds ambient representatives of the invariant-factor generators
    and :meth:`coords` maps ambient cycles to module coordinates.
    """

    def __init__(self, A, B, p, m):
        mod = p**m
        self.p, self.m = p, m
        A = np.asarray(A, dtype=np.int64) % mod
        B = np.asarray(B, dtype=np.int64) % mod
        n = A.shape[0] if A.ndim == 2 and A.shape[0] else B.shape[1]
        self.n = n
        if B.size and B.shape[0]:
            sb = smith(B, p, m, left=False, right=True)
            ks, cs = [], []
            for k, v in enumerate(sb.vals):
                if v > 0:
                    ks.append(k)
                    cs.append(v)
            ks += list(range(sb.rank, n))
            cs += [m] * (n - sb.rank)
            V, Vinv = sb.V, sb.Vinv
        else:
            ks, cs = list(range(n)), [m] * n
            V = Vinv = np.eye(n, dtype=np.int64)
        self._ks = np.array(ks, dtype=np.int64)
        self._c = np.array(cs, dtype=np.int64)
        self._scale = np.array([p ** (m - c) for c in cs], dtype=np.int64)
        self._Vinv = Vinv[self._ks] if len(ks) else np.zeros((0, n), dtype=np.int64)
        K = (V[:, self._ks] * self._scale[None, :]) % mod if len(ks) else np.zeros((n, 0), dtype=np.int64)
        g = len(ks)
        Y = self._kernel_coords(A) if A.size else np.zeros((g, 0), dtype=np.int64)
        W = np.concatenate([np.diag([p**int(c) % mod for c in cs]).astype(np.int64).reshape(g, g), Y], axis=1)
        if g:
            sw = smith(W, p, m, left=True, right=False)
            exps = list(sw.vals) + [m] * (g - sw.rank)
            kept = [i for i, e in enumerate(exps) if e > 0][::-1]
            self.exps = tuple(exps[i] for i in kept)
            self._U = sw.U[kept]
            self.gens = mm(K, sw.Uinv[:, kept], mod)
        else:
            self.exps = ()
            self._U = np.zeros((0, 0), dtype=np.int64)
            self.gens = np.zeros((n, 0), dtype=np.int64)
        self._mods = np.array([p**e for e in self.exps], dtype=np.int64)

    def _kernel_coords(self, X):
        mod = self.p**self.m
        y = mm(self._Vinv, X, mod)
        return (y // self._scale[:, None]) % (self.p ** self._c)[:, None]

    def coords(self, X):
        """Module coordinates of ambient cycles (vector or column matrix)."""
        X = np.asarray(X, dtype=np.int64)
        vec = X.ndim == 1
        if vec:
            X = X[:, None]
        if not self.exps:
            out = np.zeros((0, X.shape[1]), dtype=np.int64)
        else:
            w = self._kernel_coords(X)
            out = mm(self._U, w, self.p**self.m) % self._mods[:, None]
        return out[:, 0] if vec else out

    def module(self, actions=None):
        return FiniteModule(self.p, self.exps, actions or {})

    def induced(self, phi):
        """Matrix of the map induced by an ambient endomorphism ``phi``."""
        return self.coords(mm(phi, self.gens, self.p**self.m))


def subquotient(A, B, p, m):
    return Subquotient(A, B, p, m)


def _common_m(*modules):
    return max([1] + [M.exponent for M in modules])


def quotient_module(M: FiniteModule, G, m=None):
    """M / <columns of G>; returns the Subquotient over M's coordinates."""
    m = m or _common_m(M)
    G = np.asarray(G, dtype=np.int64).reshape(M.rank, -1)
    A = np.concatenate([M.relation_matrix(m), G], axis=1)
    return Subquotient(A, np.zeros((0, M.rank), dtype=np.int64), M.p, m)


def kernel_between(p, src_exps, dst_exps, F, m=None):
    """ker(F: (+)Z/p^{a_j} -> (+)Z/p^{b_i}) with no ordering assumption on exponents."""
    src_exps, dst_exps = list(src_exps), list(dst_exps)
    m = m or max([1] + src_exps + dst_exps)
    F = np.asarray(F, dtype=np.int64).reshape(len(dst_exps), len(src_exps))
    scale = np.array([p ** (m - e) for e in dst_exps], dtype=np.int64).reshape(-1, 1)
    B = (F * scale) % p**m
    A = np.diag([p**e % p**m for e in src_exps]).astype(np.int64).reshape(len(src_exps), len(src_exps))
    if not src_exps:
        A = np.zeros((0, 0), dtype=np.int64)
        B = np.zeros((len(dst_exps), 0), dtype=np.int64)
    return Subquotient(A, B, p, m)


def hom_kernel(M1: FiniteModule, M2: FiniteModule, F, m=None):
    """ker(F: M1 -> M2) as a Subquotient over M1's coordinates."""
    return kernel_between(M1.p, M1.exps, M2.exps, F, m or _common_m(M1, M2))


def submodule(M: FiniteModule, G, m=None):
    """The submodule generated by the columns of G, with coordinates."""
    m = m or _common_m(M)
    Q = quotient_module(M, G, m)
    proj = Q.coords(np.eye(M.rank, dtype=np.int64)) if M.rank else np.zeros((len(Q.exps), 0), dtype=np.int64)
    return hom_kernel(M, Q.module(), proj, m)


def is_injective(M1: FiniteModule, M2: FiniteModule, F):
    return not hom_kernel(M1, M2, F).exps


def is_isomorphism(M1: FiniteModule, M2: FiniteModule, F):
    return M1.exps == M2.exps and is_injective(M1, M2, F)


def image_exps(M1: FiniteModule, M2: FiniteModule, F):
    """Invariant factor exponents of im(F)."""
    F = np.asarray(F, dtype=np.int64).reshape(M2.rank, M1.rank)
    return submodule(M2, F).exps


def kernel_image_cokernel(A: Matrix):
    """(ker, im, coker) of A viewed as a map (Z/p^m)^cols -> (Z/p^m)^rows."""
    p, m = A.ring.p, A.ring.m
    s = smith(A.entries, p, m, left=False, right=False)
    r, c = A.entries.shape
    ker = sorted([v for v in s.vals if v > 0] + [m] * (c - s.rank), reverse=True)
    im = sorted([m - v for v in s.vals if v < m], reverse=True)
    coker = sorted([v for v in s.vals if v > 0] + [m] * (r - s.rank), reverse=True)
    return FiniteModule(p, ker), FiniteModule(p, im), FiniteModule(p, coker)


def underlying_abelian(ring: Ring | RingSpec, d):
    """Block matrix over Z/p^m of an R-matrix ``d`` of shape (rows, cols, basis).

    Block (i, j) is the regular representation of the entry d[i, j]; rows and
    columns are ordered (module index, basis index).
    """
    if isinstance(ring, RingSpec):
        if ring.graded:
            raise RingError("underlying_abelian needs a finite local ring")
        ring = make_ring(ring)
    d = np.asarray(d, dtype=np.int64)
    r2, r1, B = d.shape
    if B != ring.size:
        raise RingError("matrix entries do not match the ring basis")
    big = np.zeros((r2, B, r1, B), dtype=np.int64)
    if r1 and r2:
        for b in range(B):
            big[:, :, :, b] = ring.shift(d, b).transpose(0, 2, 1)
    return big.reshape(r2 * B, r1 * B) % ring.mod


def block_diag_action(ring: Ring, x, rank):
    """Ambient matrix of multiplication by the ring element x on R^rank."""
    L = ring.regular_matrix(x)
    return np.kron(np.eye(rank, dtype=np.int64), L) % ring.mod
