"""Hilbert series of monomial quotients.

Series are kept as numerators over (1 - t)^q; numerators are Laurent
polynomials stored as {exponent: integer coefficient} so negative degree
shifts are allowed.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb

from .poly import divides


def minimalize(monos):
    monos = sorted(set(monos), key=lambda a: (sum(a), a))
    out = []
    for a in monos:
        if not any(divides(b, a) for b in out):
            out.append(a)
    return tuple(out)


def padd(f, g, c=1, shift=0):
    out = dict(f)
    for e, x in g.items():
        y = out.get(e + shift, 0) + c * x
        if y:
            out[e + shift] = y
        else:
            out.pop(e + shift, None)
    return out


@lru_cache(maxsize=None)
def _numerator(gens):
    if not gens:
        return ((0, 1),)
    if any(sum(a) == 0 for a in gens):
        return ()
    # split on the last generator: N(J) = N(J') - t^deg(m) N(J' : m)
    *rest, m = gens
    rest = minimalize(rest)
    colon = minimalize(tuple(max(x - y, 0) for x, y in zip(a, m)) for a in rest)
    out = padd(dict(_numerator(rest)), dict(_numerator(colon)), -1, sum(m))
    return tuple(sorted(out.items()))


def monomial_numerator(gens):
    """Numerator K(t) with HS(S/J) = K(t) / (1 - t)^q for the monomial ideal J."""
    return dict(_numerator(minimalize(gens)))


def module_numerator(leads_by_pos, shifts):
    out = {}
    for pos, s in enumerate(shifts):
        out = padd(out, monomial_numerator(leads_by_pos.get(pos, [])), 1, s)
    return out


def divide_one_minus_t(num):
    """Divide by (1 - t) when num(1) == 0."""
    if not num:
        return {}
    lo, hi = min(num), max(num)
    coeffs = [num.get(e, 0) for e in range(lo, hi + 1)]
    # (1 - t) Q = N  =>  Q_k = sum_{i<=k} N_i
    q, acc = {}, 0
    for k, c in enumerate(coeffs[:-1]):
        acc += c
        if acc:
            q[lo + k] = acc
    return q


def dimension_and_multiplicity(num, nvars):
    """Krull dimension (-1 for the zero module) and multiplicity from a numerator."""
    if not num:
        return -1, 0
    k = 0
    while sum(num.values()) == 0:
        num = divide_one_minus_t(num)
        k += 1
    return nvars - k, sum(num.values())


def series_values(num, nvars, D):
    """Hilbert function values HF(0..D) from the numerator."""
    vals = []
    for d in range(D + 1):
        total = 0
        for e, c in num.items():
            k = d - e
            if k >= 0:
                total += c * (comb(k + nvars - 1, nvars - 1) if nvars else (1 if k == 0 else 0))
        vals.append(total)
    return vals


def times_one_minus_t_power(num, e):
    """num * (1 - t^e)."""
    return padd(num, num, -1, e)
