"""Seeded random test data: complexes, modules with operators, monomial ideals.

Used by the acceptance suite and by ``patchlab selfcheck``.
"""

from __future__ import annotations

import numpy as np

from .complexes import Complex
from .linalg import FiniteModule
from .rings import make_ring


def random_element(R, rng, ideal=False):
    x = rng.integers(0, R.mod, R.size)
    if ideal:
        # multiply into the maximal ideal by a random generator
        gens = R.max_ideal_generators()
        _, g = gens[int(rng.integers(len(gens)))]
        x = R.mul(x, g)
    return x % R.mod


def random_unit(R, rng):
    while True:
        x = random_element(R, rng)
        if R.is_unit(x):
            return x


def _pieces(R, rng, length, max_rank):
    """Elementary complexes placed at degree offsets 0..length."""
    ranks = [0] * (length + 1)
    entries = []  # (degree, src index, dst index, element)
    kinds = ["unit", "ideal", "free", "koszul"]
    for _ in range(int(rng.integers(1, 3 * max_rank))):
        kind = kinds[int(rng.integers(len(kinds)))]
        if kind == "koszul" and length >= 2:
            k = int(rng.integers(0, length - 1))
            if ranks[k] + 1 > max_rank or ranks[k + 1] + 2 > max_rank or ranks[k + 2] + 1 > max_rank:
                continue
            a, b = random_element(R, rng, True), random_element(R, rng, True)
            s, t0, u = ranks[k], ranks[k + 1], ranks[k + 2]
            entries += [(k, s, t0, a), (k, s, t0 + 1, b),
                        (k + 1, t0, u, (-b) % R.mod), (k + 1, t0 + 1, u, a)]
            ranks[k] += 1
            ranks[k + 1] += 2
            ranks[k + 2] += 1
        elif kind in ("unit", "ideal") and length >= 1:
            k = int(rng.integers(0, length))
            if ranks[k] + 1 > max_rank or ranks[k + 1] + 1 > max_rank:
                continue
            x = random_unit(R, rng) if kind == "unit" else random_element(R, rng, True)
            entries.append((k, ranks[k], ranks[k + 1], x))
            ranks[k] += 1
            ranks[k + 1] += 1
        else:
            k = int(rng.integers(0, length + 1))
            if ranks[k] + 1 > max_rank:
                continue
            ranks[k] += 1
    diffs = [np.zeros((ranks[k + 1], ranks[k], R.size), dtype=np.int64) for k in range(length)]
    for k, s, t, x in entries:
        diffs[k][t, s] = x
    return ranks, diffs


def scramble(C: Complex, rng, moves=None):
    """Apply random elementary base changes in every degree (keeps d^2 = 0)."""
    R = C.R
    diffs = [d.copy() for d in C.diffs]
    for k, r in enumerate(C.ranks):
        for _ in range(moves if moves is not None else 3 * r):
            if r == 0:
                break
            i, j = int(rng.integers(r)), int(rng.integers(r))
            if i == j:
                u = random_unit(R, rng)
                uinv = R.inverse(u)
                # e_i -> u e_i
                if k < len(diffs):
                    diffs[k][:, i] = R.mul(diffs[k][:, i], u[None, :])
                if k > 0:
                    diffs[k - 1][i] = R.mul(diffs[k - 1][i], uinv[None, :])
                continue
            a = random_element(R, rng)
            # new basis e_j' = e_j + a e_i: columns of d^k, rows of d^{k-1}
            if k < len(diffs):
                diffs[k][:, j] = (diffs[k][:, j] + R.mul(diffs[k][:, i], a[None, :])) % R.mod
            if k > 0:
                diffs[k - 1][i] = (diffs[k - 1][i] - R.mul(diffs[k - 1][j], a[None, :])) % R.mod
    return Complex(C.ring, C.lo, list(C.ranks), diffs)


def random_complex(spec, rng, length=None, max_rank=6):
    R = make_ring(spec)
    length = int(rng.integers(1, 4)) if length is None else length
    ranks, diffs = _pieces(R, rng, length, max_rank)
    return scramble(Complex(spec, 0, ranks, diffs), rng)


def random_module(p, rng, max_order=10**4, max_rank=4, max_exp=3):
    exps = []
    total = 1
    for _ in range(int(rng.integers(1, max_rank + 1))):
        e = int(rng.integers(1, max_exp + 1))
        if total * p**e > max_order:
            break
        exps.append(e)
        total *= p**e
    if not exps:
        exps = [1]
    return FiniteModule(p, tuple(sorted(exps, reverse=True)))


def random_endomorphism(M: FiniteModule, rng):
    """Uniform random well-defined endomorphism of M."""
    p, e = M.p, np.array(M.exps)
    F = rng.integers(0, p ** max(M.exps), (M.rank, M.rank))
    need = np.maximum(0, e[:, None] - e[None, :])
    return M.reduce(F * p**need)


def random_operator_pair(M: FiniteModule, rng):
    """Random T together with a commuting ring action (polynomial in T or a scalar)."""
    T = random_endomorphism(M, rng)
    coeffs = rng.integers(0, M.p ** max(M.exps), 3)
    A = M.reduce(coeffs[0] * M.identity() + coeffs[1] * T + coeffs[2] * M.compose(T, T))
    return T, A


def random_monomial_ideal(q, rng, max_deg=4, max_gens=4):
    gens = []
    for _ in range(int(rng.integers(1, max_gens + 1))):
        d = int(rng.integers(1, max_deg + 1))
        exps = [0] * q
        for _ in range(d):
            exps[int(rng.integers(q))] += 1
        gens.append(tuple(exps))
    return gens
