"""Brute-force oracles for monomial quotients, independent of Gröbner code."""

from __future__ import annotations

from itertools import combinations

from .poly import divides, monomials_of_degree


def standard_monomial_counts(q, gens, D):
    """HF(d) of S/(gens) for d = 0..D by listing monomials outside the ideal."""
    return [sum(1 for a in monomials_of_degree(q, d) if not any(divides(g, a) for g in gens))
            for d in range(D + 1)]


def monomial_dimension(q, gens):
    """Largest set of variables whose monomials avoid the ideal (-1 if S/J = 0)."""
    if any(sum(g) == 0 for g in gens):
        return -1
    for k in range(q, -1, -1):
        for V in combinations(range(q), k):
            if all(any(g[i] for i in range(q) if i not in V) for g in gens):
                return k
    return 0
