"""Vectors of polynomials over F_p and Gröbner bases of graded submodules.

A vector in a free module F = (+) S(-s_i) is a dict mapping (position,
exponent tuple) to a nonzero coefficient mod p.  Ideals are submodules of
S^1.  Terms are ordered position-over-term (lower position is larger) and by
degree reverse lexicographic order inside a position.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import GradedError


def mono_deg(a):
    return sum(a)


def term_key(t):
    pos, a = t
    return (-pos, sum(a), tuple(-x for x in reversed(a)))


def divides(a, b):
    return all(x <= y for x, y in zip(a, b))


def mono_lcm(a, b):
    return tuple(max(x, y) for x, y in zip(a, b))


def mono_quo(b, a):
    return tuple(y - x for x, y in zip(a, b))


def mono_add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def clean(v, p):
    return {t: c % p for t, c in v.items() if c % p}


def lead(v):
    t = max(v, key=term_key)
    return t, v[t]


def add_scaled(u, v, c, mono, p):
    """u + c * mono * v (u is modified in place and returned)."""
    for (pos, a), x in v.items():
        t = (pos, mono_add(a, mono))
        y = (u.get(t, 0) + c * x) % p
        if y:
            u[t] = y
        else:
            u.pop(t, None)
    return u


def scale(v, c, p):
    return {t: (x * c) % p for t, x in v.items() if (x * c) % p}


def vec_degree(v, shifts):
    """Homogeneous degree of v, or raise if v is not homogeneous."""
    degs = {sum(a) + shifts[pos] for pos, a in v}
    if len(degs) > 1:
        raise GradedError(f"element is not homogeneous (degrees {sorted(degs)})", code="inhomogeneous")
    return degs.pop() if degs else None


def poly_vec(poly, pos=0):
    """Polynomial dict {exps: c} -> vector at the given position."""
    return {(pos, a): c for a, c in poly.items()}


def mul_poly_vec(poly, v, p):
    out = {}
    for a, c in poly.items():
        add_scaled(out, v, c, a, p)
    return out


@dataclass
class GB:
    """Reduced Gröbner basis with lead data cached."""

    p: int
    nvars: int
    shifts: tuple
    basis: list = field(default_factory=list)

    def __post_init__(self):
        self.leads = [lead(g)[0] for g in self.basis]

    def reduce(self, v):
        """Full normal form of v."""
        p = self.p
        v = dict(v)
        rem = {}
        while v:
            t, c = lead(v)
            pos, a = t
            for g, (gp, ga) in zip(self.basis, self.leads):
                if gp == pos and divides(ga, a):
                    add_scaled(v, g, (-c) % p, mono_quo(a, ga), p)
                    break
            else:
                rem[t] = c
                del v[t]
        return rem

    def contains(self, v):
        return not self.reduce(v)

    def lead_monomials(self, pos):
        return [a for gp, a in self.leads if gp == pos]


def _monic(v, p):
    _, c = lead(v)
    return scale(v, pow(c, -1, p), p)


def _spoly(f, g, p):
    (pf, af), cf = lead(f)
    (pg, ag), cg = lead(g)
    L = mono_lcm(af, ag)
    out = scale({(pos, mono_add(a, mono_quo(L, af))): x for (pos, a), x in f.items()}, 1, p)
    return add_scaled(out, g, (-cf * pow(cg, -1, p)) % p, mono_quo(L, ag), p)


def buchberger(gens, p, nvars, shifts):
    """Reduced Gröbner basis of the submodule generated by homogeneous ``gens``.

    Pairs are processed by degree; the chain criterion skips pairs whose lcm
    is divisible by the lead of a third element already paired with both.
    """
    shifts = tuple(shifts)
    G = []
    for g in gens:
        g = clean(g, p)
        if g:
            vec_degree(g, shifts)
            G.append(_monic(g, p))
    # pre-reduce generators against each other to keep the basis small
    work = GB(p, nvars, shifts, [])
    basis = []
    pairs = []

    def pair_degree(i, j):
        (pi, ai), _ = lead(basis[i])
        (_, aj), _ = lead(basis[j])
        return mono_deg(mono_lcm(ai, aj)) + shifts[pi]

    def add(g):
        basis.append(g)
        work.basis = basis
        work.leads.append(lead(g)[0])
        j = len(basis) - 1
        pj, aj = work.leads[j]
        for i in range(j):
            pi, ai = work.leads[i]
            if pi == pj:
                pairs.append((pair_degree(i, j), i, j))

    pending = sorted(G, key=lambda v: (vec_degree(v, shifts), sorted(map(term_key, v))))
    for g in pending:
        r = work.reduce(g)
        if r:
            add(_monic(r, p))
    while pairs:
        pairs.sort()
        d, i, j = pairs.pop(0)
        pi, ai = work.leads[i]
        _, aj = work.leads[j]
        L = mono_lcm(ai, aj)
        skip = False
        for k, (pk, ak) in enumerate(work.leads):
            if k in (i, j) or pk != pi or not divides(ak, L):
                continue
            if not _pending(pairs, i, k) and not _pending(pairs, j, k):
                skip = True
                break
        if skip:
            continue
        r = work.reduce(_spoly(basis[i], basis[j], p))
        if r:
            add(_monic(r, p))
    return interreduce(basis, p, nvars, shifts)


def _pending(pairs, a, b):
    lo, hi = min(a, b), max(a, b)
    return any(i == lo and j == hi for _, i, j in pairs)


def interreduce(basis, p, nvars, shifts):
    """Drop elements with divisible leads and fully reduce the rest."""
    leads = [lead(g)[0] for g in basis]
    keep = []
    for i, (pi, ai) in enumerate(leads):
        dominated = False
        for j, (pj, aj) in enumerate(leads):
            if j != i and pj == pi and divides(aj, ai) and (aj != ai or j < i):
                dominated = True
                break
        if not dominated:
            keep.append(basis[i])
    out = []
    for i, g in enumerate(keep):
        others = GB(p, nvars, shifts, keep[:i] + keep[i + 1:])
        (t, c) = lead(g)
        tail = others.reduce({k: v for k, v in g.items() if k != t})
        tail[t] = c
        out.append(_monic(tail, p))
    out.sort(key=lambda v: term_key(lead(v)[0]), reverse=True)
    return GB(p, nvars, tuple(shifts), out)


def syzygies(vectors, p, nvars, shifts, degs=None):
    """Generators of the syzygy module of ``vectors`` (elements of F with ``shifts``).

    Uses the tagged module F (+) S^k: a Gröbner basis of {(v_j, e_j)} under
    position-over-term with the F positions larger eliminates F, leaving
    syzygies in the tag coordinates.  Returns (syzygy vectors, their shifts).
    """
    n = len(shifts)
    if degs is None:
        degs = [vec_degree(v, shifts) for v in vectors]
        if any(d is None for d in degs):
            raise GradedError("zero vectors need explicit degrees")
    degs = list(degs)
    tag_shifts = tuple(shifts) + tuple(degs)
    tagged = []
    for j, v in enumerate(vectors):
        t = dict(v)
        t[(n + j, (0,) * nvars)] = 1
        tagged.append(t)
    G = buchberger(tagged, p, nvars, tag_shifts)
    syz = []
    for g in G.basis:
        if all(pos >= n for pos, _ in g):
            syz.append({(pos - n, a): c for (pos, a), c in g.items()})
    return syz, list(degs)


def combination(coeffs, vectors, p):
    """Sum of poly-vector coefficients times vectors: coeffs is a vector over len(vectors)."""
    out = {}
    for (j, a), c in coeffs.items():
        add_scaled(out, vectors[j], c, a, p)
    return out


def monomials_of_degree(nvars, d):
    if d < 0:
        return []
    if nvars == 0:
        return [()] if d == 0 else []
    out = []
    for a in range(d, -1, -1):
        for rest in monomials_of_degree(nvars - 1, d - a):
            out.append((a,) + rest)
    return out
