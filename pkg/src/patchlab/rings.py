"""Finite local coefficient rings and the structure maps between them.

Every finite ring here has the shape

    Z/p^m [ (Z/p^N)^q ] [z_1, ..., z_j] / (z_1^t, ..., z_j^t)

which covers chain rings (q = j = 0), group algebras (j = 0) and the
truncated-variable extensions used for framed patching.  Elements are dense
coefficient vectors over the monomial basis ``gamma^e z^a``; arithmetic is
done with numpy int64 arrays whose last axis is the basis axis.

Graded polynomial quotients share :class:`RingSpec` for serialization but
their arithmetic lives in :mod:`patchlab.graded`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import RingError, SizeCapError

DEFAULT_MAX_BASIS = 1 << 16
MAX_MODULUS = 1 << 31


def max_basis():
    """Basis-size cap, overridable through ``PATCHLAB_MAX_BASIS``."""
    raw = os.environ.get("PATCHLAB_MAX_BASIS")
    if raw is None:
        return DEFAULT_MAX_BASIS
    try:
        return int(raw)
    except ValueError:
        raise RingError(f"PATCHLAB_MAX_BASIS is not an integer: {raw!r}")


def is_prime(n):
    if n < 2:
        return False
    k = 2
    while k * k <= n:
        if n % k == 0:
            return False
        k += 1
    return True


def normalize_relations(relations):
    """Relations as tuples of (coefficient, exponent tuple) terms, each a polynomial."""
    out = []
    for rel in relations:
        if isinstance(rel, dict):
            terms = [(int(c), tuple(int(x) for x in a)) for a, c in rel.items()]
        else:
            terms = [(int(c), tuple(int(x) for x in a)) for c, a in rel]
        out.append(tuple(sorted(terms, key=lambda t: t[1])))
    return tuple(out)


@dataclass(frozen=True)
class RingSpec:
    """Presentation of a coefficient/level ring.

    ``relations is None`` means a finite local ring; a tuple (possibly empty)
    means the graded quotient ``F_p[x_1..x_q] / (relations)``.
    """

    p: int
    m: int = 1
    q: int = 0
    N: int = 0
    j: int = 0
    t: int = 1
    relations: tuple | None = None

    def __post_init__(self):
        if not is_prime(self.p):
            raise RingError(f"p = {self.p} is not prime")
        if self.graded:
            object.__setattr__(self, "relations", normalize_relations(self.relations))
            if self.m != 1 or self.N != 0 or self.j != 0:
                raise RingError("graded quotients live over F_p with no level data")
            if self.q < 1:
                raise RingError("graded quotient needs at least one variable")
            return
        if self.m < 1 or self.q < 0 or self.N < 0 or self.j < 0 or self.t < 1:
            raise RingError(f"invalid ring parameters {self}")
        if self.p**self.m >= MAX_MODULUS:
            raise SizeCapError(f"coefficient modulus {self.p}^{self.m} too large")
        # canonical form: a trivial group or no variables carries no level data
        if self.q == 0 or self.N == 0:
            object.__setattr__(self, "q", 0)
            object.__setattr__(self, "N", 0)
        if self.j == 0:
            object.__setattr__(self, "t", 1)

    @property
    def graded(self):
        return self.relations is not None

    @property
    def kind(self):
        if self.graded:
            return "graded-poly-quotient"
        if self.j > 0:
            return "trunc-ext"
        if self.q > 0:
            return "group-algebra"
        return "prime-field" if self.m == 1 else "chain"

    @property
    def modulus(self):
        return self.p**self.m

    @property
    def basis_size(self):
        return (self.p**self.N) ** self.q * self.t**self.j

    def to_json(self):
        kind = self.kind
        if kind == "graded-poly-quotient":
            rels = [[[c, list(a)] for c, a in rel] for rel in self.relations]
            return {"kind": kind, "p": self.p, "q": self.q, "relations": rels}
        out = {"kind": kind, "p": self.p}
        if kind != "prime-field":
            out["m"] = self.m
        if self.q:
            out.update(q=self.q, N=self.N)
        if self.j:
            out.update(j=self.j, t=self.t)
        return out

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "kind" not in obj:
            raise RingError(f"ring spec must be an object with a 'kind': {obj!r}")
        kind = obj["kind"]
        try:
            p = int(obj["p"])
            if kind == "prime-field":
                return cls(p)
            if kind == "chain":
                return cls(p, int(obj.get("m", 1)))
            if kind == "group-algebra":
                base = obj.get("base", obj)
                return cls(p, int(base.get("m", 1)), int(obj["q"]), int(obj["N"]))
            if kind == "trunc-ext":
                base = obj.get("base", obj)
                return cls(p, int(base.get("m", 1)), int(base.get("q", 0)), int(base.get("N", 0)),
                           int(obj["j"]), int(obj["t"]))
            if kind == "graded-poly-quotient":
                return cls(p, q=int(obj["q"]), relations=tuple(obj.get("relations", ())))
        except KeyError as exc:
            raise RingError(f"ring spec of kind {kind!r} is missing field {exc}")
        raise RingError(f"unknown ring kind {kind!r}")


def chain(p, m):
    return RingSpec(p, m)


def prime_field(p):
    return RingSpec(p, 1)


def group_algebra(p, m, q, N):
    return RingSpec(p, m, q, N)


def trunc_ext(p, m, q, N, j, t):
    return RingSpec(p, m, q, N, j, t)


def graded_ring(p, q, relations=()):
    return RingSpec(p, q=q, relations=tuple(relations))


class Ring:
    """Cached arithmetic handle for a finite local :class:`RingSpec`."""

    def __init__(self, spec: RingSpec):
        if spec.graded:
            raise RingError("graded quotients have no finite-ring handle")
        if spec.basis_size > max_basis():
            raise SizeCapError(
                f"basis size {spec.basis_size} exceeds cap {max_basis()} for {spec.to_json()}")
        self.spec = spec
        self.p = spec.p
        self.m = spec.m
        self.mod = spec.modulus
        self.size = spec.basis_size
        self.group_order = spec.p**spec.N
        self.shape = (self.group_order,) * spec.q + (spec.t,) * spec.j
        self.exponents = (np.array(np.unravel_index(np.arange(self.size), self.shape)).T
                          if self.shape else np.zeros((1, 0), dtype=np.int64))
        # residue functional: gamma -> 1, z -> 0, then reduce mod p
        self.residue_mask = np.all(self.exponents[:, spec.q:] == 0, axis=1).astype(np.int64)

    def __repr__(self):
        return f"Ring({self.spec.to_json()})"

    # -- elements ---------------------------------------------------------
    def zero(self):
        return np.zeros(self.size, dtype=np.int64)

    def one(self):
        x = self.zero()
        x[0] = 1
        return x

    def scalar(self, c):
        x = self.zero()
        x[0] = c % self.mod
        return x

    def basis_element(self, exps):
        x = self.zero()
        x[np.ravel_multi_index(tuple(exps), self.shape) if self.shape else 0] = 1
        return x

    def generator_names(self):
        return ["pi"] + [f"g{i + 1}" for i in range(self.spec.q)] + [f"z{k + 1}" for k in range(self.spec.j)]

    def generator(self, name):
        """Ring element for ``pi``, ``gI`` (group generator) or ``zK``."""
        if name == "pi":
            return self.scalar(self.p)
        exps = [0] * len(self.shape)
        idx = int(name[1:]) - 1
        if name[0] == "g" and 0 <= idx < self.spec.q:
            exps[idx] = 1 % self.group_order
        elif name[0] == "z" and 0 <= idx < self.spec.j:
            if self.spec.t == 1:
                return self.zero()
            exps[self.spec.q + idx] = 1
        else:
            raise RingError(f"{self.spec.to_json()} has no generator {name!r}")
        return self.basis_element(exps)

    def max_ideal_generators(self):
        """(name, element) pairs generating the maximal ideal: pi, g_i - 1, z_k."""
        gens = [("pi", self.scalar(self.p))]
        for i in range(self.spec.q):
            gens.append((f"g{i + 1}-1", (self.generator(f"g{i + 1}") - self.one()) % self.mod))
        for k in range(self.spec.j):
            gens.append((f"z{k + 1}", self.generator(f"z{k + 1}")))
        return gens

    def norm_element(self, i):
        """Sum of all powers of the i-th group generator (1-based)."""
        x = self.zero()
        for e in range(self.group_order):
            exps = [0] * len(self.shape)
            exps[i - 1] = e
            x = x + self.basis_element(exps)
        return x % self.mod

    def reduce(self, x):
        return np.asarray(x, dtype=np.int64) % self.mod

    # -- multiplication ----------------------------------------------------
    def shift(self, x, b):
        """Multiply (an array of) elements by the basis monomial with index ``b``."""
        x = np.asarray(x, dtype=np.int64)
        if self.size == 1:
            return x.copy()
        lead = x.shape[:-1]
        y = x.reshape(lead + self.shape)
        e = self.exponents[b]
        nl = len(lead)
        for ax in range(self.spec.q):
            if e[ax]:
                y = np.roll(y, int(e[ax]), axis=nl + ax)
        for k in range(self.spec.j):
            s = int(e[self.spec.q + k])
            if s:
                ax = nl + self.spec.q + k
                out = np.zeros_like(y)
                src = [slice(None)] * y.ndim
                dst = [slice(None)] * y.ndim
                src[ax] = slice(0, self.spec.t - s)
                dst[ax] = slice(s, self.spec.t)
                out[tuple(dst)] = y[tuple(src)]
                y = out
        return y.reshape(x.shape)

    def mul(self, x, y):
        """Elementwise product of broadcastable element arrays."""
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        x, y = np.broadcast_arrays(x, y)
        if self.size == 1:
            return (x * y) % self.mod
        out = np.zeros(x.shape, dtype=np.int64)
        for b in np.flatnonzero(np.any(y.reshape(-1, self.size) != 0, axis=0)):
            out = (out + y[..., b:b + 1] * self.shift(x, b)) % self.mod
        return out

    def matmul(self, X, Y):
        """Product of ring matrices of shapes (a, k, B) and (k, c, B)."""
        X = np.asarray(X, dtype=np.int64)
        Y = np.asarray(Y, dtype=np.int64)
        a, k, _ = X.shape
        c = Y.shape[1]
        out = np.zeros((a, c, self.size), dtype=np.int64)
        if not (a and k and c):
            return out
        big = self.mod * self.mod * k >= (1 << 62)
        for b in np.flatnonzero(np.any(Y.reshape(-1, self.size) != 0, axis=0)):
            Xs = self.shift(X, b)
            Yb = Y[:, :, b]
            if big:
                term = np.einsum("akx,kc->acx", Xs.astype(object), Yb.astype(object)) % self.mod
                out = (out + term.astype(np.int64)) % self.mod
            else:
                out = (out + np.einsum("akx,kc->acx", Xs, Yb)) % self.mod
        return out

    def eye(self, n):
        return np.eye(n, dtype=np.int64)[:, :, None] * self.one()[None, None, :]

    def matinv(self, M):
        """Inverse of a square ring matrix by Gauss-Jordan with unit pivots."""
        M = self.reduce(M).copy()
        n = M.shape[0]
        inv = self.eye(n)
        for c in range(n):
            res = self.residue(M[c:, c]) if n else np.zeros(0)
            hits = np.flatnonzero(res)
            if hits.size == 0:
                raise RingError("matrix is not invertible over the ring")
            r = c + int(hits[0])
            if r != c:
                M[[c, r]] = M[[r, c]]
                inv[[c, r]] = inv[[r, c]]
            uinv = self.inverse(M[c, c])
            M[c] = self.mul(M[c], uinv[None, :])
            inv[c] = self.mul(inv[c], uinv[None, :])
            for k in range(n):
                if k != c and np.any(M[k, c]):
                    f = M[k, c].copy()
                    M[k] = (M[k] - self.mul(M[c], f[None, :])) % self.mod
                    inv[k] = (inv[k] - self.mul(inv[c], f[None, :])) % self.mod
        return inv

    def regular_matrix(self, x):
        """Matrix of multiplication by ``x`` on the basis (columns = x * e_b)."""
        x = np.asarray(x, dtype=np.int64)
        cols = [self.shift(x, b) for b in range(self.size)]
        return np.stack(cols, axis=1) % self.mod

    def residue(self, x):
        """Image in the residue field F_p (gamma -> 1, z -> 0)."""
        x = np.asarray(x, dtype=np.int64)
        return (x @ self.residue_mask) % self.p

    def counit(self, x):
        """Image in Z/p^m under gamma -> 1, z -> 0 (integer array)."""
        x = np.asarray(x, dtype=np.int64)
        return (x @ self.residue_mask) % self.mod

    def is_unit(self, x):
        return bool(self.residue(x) != 0)

    def inverse(self, u):
        """Inverse of a unit by Newton iteration x <- x (2 - u x)."""
        u = self.reduce(u)
        r = int(self.residue(u))
        if r == 0:
            raise RingError("element is not a unit")
        x = self.scalar(pow(r, -1, self.p))
        one = self.one()
        two = self.scalar(2)
        for _ in range(64):
            ux = self.mul(u, x)
            if np.array_equal(ux, one):
                return x
            x = self.mul(x, (two - ux) % self.mod)
        raise RingError("unit inversion did not converge")

    def scalar_inverse(self, c):
        return pow(int(c) % self.mod, -1, self.mod)


@lru_cache(maxsize=256)
def make_ring(spec: RingSpec) -> Ring:
    """Build (and cache) the arithmetic handle for a finite local ring."""
    return Ring(spec)


@dataclass(frozen=True)
class RingElement:
    ring: RingSpec
    coords: tuple

    def __post_init__(self):
        if self.ring.graded:
            raise RingError("RingElement is for finite local rings; use graded polynomials")
        if len(self.coords) != self.ring.basis_size:
            raise RingError(
                f"coordinate vector of length {len(self.coords)} for basis size {self.ring.basis_size}")
        mod = self.ring.modulus
        object.__setattr__(self, "coords", tuple(int(c) % mod for c in self.coords))

    @classmethod
    def from_array(cls, ring, arr):
        return cls(ring, tuple(int(c) for c in np.asarray(arr).ravel()))

    @property
    def array(self):
        return np.array(self.coords, dtype=np.int64)

    def _check(self, other):
        if not isinstance(other, RingElement) or other.ring != self.ring:
            raise RingError("ring mismatch")

    def __add__(self, other):
        self._check(other)
        return RingElement.from_array(self.ring, make_ring(self.ring).reduce(self.array + other.array))

    def __sub__(self, other):
        self._check(other)
        return RingElement.from_array(self.ring, make_ring(self.ring).reduce(self.array - other.array))

    def __neg__(self):
        return RingElement.from_array(self.ring, make_ring(self.ring).reduce(-self.array))

    def __mul__(self, other):
        self._check(other)
        return RingElement.from_array(self.ring, make_ring(self.ring).mul(self.array, other.array))

    def to_json(self):
        return list(self.coords)


def element(spec, coords):
    return RingElement(spec, tuple(coords))


def ring_one(spec):
    return RingElement.from_array(spec, make_ring(spec).one())


def ring_generator(spec, name):
    return RingElement.from_array(spec, make_ring(spec).generator(name))


def is_unit(x: RingElement) -> bool:
    """True iff ``x`` lies outside the maximal ideal."""
    if x.ring.graded:
        raise RingError("is_unit is defined for finite local rings only")
    return make_ring(x.ring).is_unit(x.array)


MAP_KINDS = ("reduce-level", "mod-power", "augment", "kill-vars", "inclusion", "quotient")


@dataclass(frozen=True)
class RingMap:
    """Structure map between finite local rings.

    All kinds are instances of one monomial rule: group exponents reduce mod
    p^N' (or collapse to 1 under augmentation), z-exponents beyond the target
    truncation vanish (or all z vanish under kill-vars), adjoined variables
    get exponent 0, and coefficients reduce mod p^m'.
    """

    src: RingSpec
    dst: RingSpec
    kind: str = "quotient"
    _index: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise RingError(f"unknown map kind {self.kind!r}")
        s, d = self.src, self.dst
        if s.graded or d.graded:
            raise RingError("ring maps are defined between finite local rings")
        if s.p != d.p or d.m > s.m:
            raise RingError(f"no {self.kind} map {s.to_json()} -> {d.to_json()}")
        if d.q not in (0, s.q) or (d.q == s.q and d.N > s.N):
            raise RingError(f"no group quotient {s.to_json()} -> {d.to_json()}")
        if d.j > s.j:
            if s.j and d.t != s.t:
                raise RingError("inclusion must keep the truncation of existing variables")
            if d.m != s.m:
                raise RingError("inclusion keeps the coefficient ring")
        elif d.j == s.j and d.t > s.t:
            raise RingError("cannot enlarge a truncation")
        elif d.j not in (0, s.j):
            raise RingError("kill-vars removes all adjoined variables")
        object.__setattr__(self, "_index", self._build_index())

    def _build_index(self):
        s, d = self.src, self.dst
        rs, rd = make_ring(s), make_ring(d)
        e = rs.exponents
        cols = []
        if d.q:
            cols.append(e[:, : s.q] % rd.group_order)
        valid = np.ones(rs.size, dtype=bool)
        z = e[:, s.q:]
        if d.j == 0:
            valid &= np.all(z == 0, axis=1)
        elif d.j == s.j:
            valid &= np.all(z < d.t, axis=1)
            cols.append(z)
        else:
            cols.append(z)
            cols.append(np.zeros((rs.size, d.j - s.j), dtype=np.int64))
        if not rd.shape:
            return np.where(valid, 0, -1)
        target = np.concatenate(cols, axis=1) if cols else np.zeros((rs.size, 0), dtype=np.int64)
        clipped = np.where(valid[:, None], target, 0)
        idx = np.ravel_multi_index(tuple(clipped.T), rd.shape)
        return np.where(valid, idx, -1)

    def apply_array(self, x):
        """Apply to an array whose last axis is the source basis."""
        x = np.asarray(x, dtype=np.int64)
        rd = make_ring(self.dst)
        out = np.zeros(x.shape[:-1] + (rd.size,), dtype=np.int64)
        valid = self._index >= 0
        flat_x = x.reshape(-1, x.shape[-1])[:, valid]
        flat_out = out.reshape(-1, rd.size)
        np.add.at(flat_out.T, self._index[valid], flat_x.T)
        return out % rd.mod

    def then(self, other: "RingMap") -> "RingMap":
        """Composite ``other o self`` (apply self first)."""
        if other.src != self.dst:
            raise RingError("maps are not composable")
        return RingMap(self.src, other.dst, "quotient")

    def to_json(self):
        return {"kind": self.kind, "src": self.src.to_json(), "dst": self.dst.to_json()}


def reduce_level(src, N):
    return RingMap(src, RingSpec(src.p, src.m, src.q, N, src.j, src.t), "reduce-level")


def mod_power(src, n):
    return RingMap(src, RingSpec(src.p, n, src.q, src.N, src.j, src.t), "mod-power")


def augment(src):
    return RingMap(src, RingSpec(src.p, src.m, 0, 0, src.j, src.t), "augment")


def kill_vars(src):
    return RingMap(src, RingSpec(src.p, src.m, src.q, src.N), "kill-vars")


def inclusion(src, j, t):
    return RingMap(src, RingSpec(src.p, src.m, src.q, src.N, src.j + j, t), "inclusion")


def quotient(src, dst):
    return RingMap(src, dst, "quotient")


def apply_map(f: RingMap, x: RingElement) -> RingElement:
    if x.ring != f.src:
        raise RingError("element does not belong to the source of the map")
    return RingElement.from_array(f.dst, f.apply_array(x.array))


@dataclass(frozen=True)
class IdealSpec:
    ring: RingSpec
    generators: tuple

    def contains(self, x: RingElement) -> bool:
        """Membership via the Z/p^m-linear span of generator multiples."""
        from .linalg import in_column_span

        if x.ring != self.ring:
            raise RingError("ring mismatch")
        ring = make_ring(self.ring)
        if not self.generators:
            return not np.any(x.array)
        cols = np.concatenate([ring.regular_matrix(g.array) for g in self.generators], axis=1)
        return in_column_span(cols, x.array, ring.p, ring.m)


def b_ideal(spec: RingSpec, N: int) -> IdealSpec:
    """The ideal generated by pi^N, (gamma_i^{p^N} - 1) and z_k^N."""
    ring = make_ring(spec)
    gens = [ring.scalar(ring.p**N)]
    for i in range(spec.q):
        exps = [0] * len(ring.shape)
        exps[i] = (ring.p**N) % ring.group_order
        gens.append((ring.basis_element(exps) - ring.one()) % ring.mod)
    for k in range(spec.j):
        if N < spec.t:
            exps = [0] * len(ring.shape)
            exps[spec.q + k] = N
            gens.append(ring.basis_element(exps))
    return IdealSpec(spec, tuple(RingElement.from_array(spec, g) for g in gens))


@dataclass(frozen=True)
class VariableQuotient:
    """R -> R / (g_i - 1 for i in ``group``, z_k for k in ``z``), indices 1-based.

    Duck-types :class:`RingMap` (``src``, ``dst``, ``apply_array``) so it can be
    used for base change.
    """

    src: RingSpec
    group: tuple = ()
    z: tuple = ()
    kind: str = "kill"

    def __post_init__(self):
        s = self.src
        if any(not 1 <= i <= s.q for i in self.group) or any(not 1 <= k <= s.j for k in self.z):
            raise RingError(f"cannot kill variables {self.group}, {self.z} of {s.to_json()}")
        object.__setattr__(self, "group", tuple(sorted(set(self.group))))
        object.__setattr__(self, "z", tuple(sorted(set(self.z))))

    @property
    def dst(self):
        s = self.src
        return RingSpec(s.p, s.m, s.q - len(self.group), s.N, s.j - len(self.z), s.t)

    def _index(self):
        rs, rd = make_ring(self.src), make_ring(self.dst)
        e = rs.exponents
        keep_g = [i for i in range(self.src.q) if i + 1 not in self.group]
        kill_z = [self.src.q + k - 1 for k in self.z]
        keep_z = [self.src.q + k for k in range(self.src.j) if k + 1 not in self.z]
        valid = np.all(e[:, kill_z] == 0, axis=1) if kill_z else np.ones(rs.size, dtype=bool)
        if not rd.shape:
            return np.where(valid, 0, -1)
        target = e[:, keep_g + keep_z]
        idx = np.ravel_multi_index(tuple(target.T), rd.shape)
        return np.where(valid, idx, -1)

    def apply_array(self, x):
        x = np.asarray(x, dtype=np.int64)
        rd = make_ring(self.dst)
        index = self._index()
        out = np.zeros(x.shape[:-1] + (rd.size,), dtype=np.int64)
        valid = index >= 0
        flat_x = x.reshape(-1, x.shape[-1])[:, valid]
        np.add.at(out.reshape(-1, rd.size).T, index[valid], flat_x.T)
        return out % rd.mod

    def to_json(self):
        return {"kind": self.kind, "src": self.src.to_json(), "group": list(self.group), "z": list(self.z)}
