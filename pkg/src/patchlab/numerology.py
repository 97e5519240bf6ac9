"""Integer bookkeeping for the invariants l0, q0 and the patching dimension count."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

from .errors import NumerologyError


@dataclass(frozen=True)
class SignatureInput:
    n: int
    r1: int
    r2: int

    def __post_init__(self):
        for name in ("n", "r1", "r2"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise NumerologyError(f"{name} must be an integer, got {v!r}", code="signature")
        if self.n < 1 or self.r1 < 0 or self.r2 < 0:
            raise NumerologyError(f"need n >= 1 and r1, r2 >= 0, got {self}", code="signature")
        if self.degree < 1:
            raise NumerologyError("the field degree r1 + 2*r2 must be positive", code="signature")

    @property
    def degree(self):
        return self.r1 + 2 * self.r2


@dataclass(frozen=True)
class Invariants:
    l0: int
    q0: int
    dimY: int
    h0sum: int

    def to_json(self):
        return asdict(self)


def _l0(n, r1, r2):
    if n % 2:
        return r1 * (n - 1) // 2 + r2 * (n - 1)
    return r1 * (n - 2) // 2 + r2 * (n - 1)


def invariants(s: SignatureInput) -> Invariants:
    n, r1, r2 = s.n, s.r1, s.r2
    l0 = _l0(n, r1, r2)
    dimY = r1 * (n * n - 1 - n * (n - 1) // 2) + r2 * (n * n - 1)
    q0, odd = divmod(dimY - l0, 2)
    if odd:
        raise NumerologyError(f"dim Y - l0 = {dimY - l0} is odd for {s}", code="integrality")
    per_real = (n * n + 1) // 2 - 1 if n % 2 else n * n // 2 - 1
    h0sum = r1 * per_real + r2 * (n * n - 1)
    return Invariants(l0, q0, dimY, h0sum)


def check_infinity_identity(s: SignatureInput):
    """Sum over archimedean places of h^0 of the adjoint versus [F:Q] n(n-1)/2 + l0."""
    inv = invariants(s)
    rhs = s.degree * s.n * (s.n - 1) // 2 + inv.l0
    return inv.h0sum, rhs, inv.h0sum == rhs


def oddness(traces, n):
    """True iff every complex-conjugation trace lies in {-1, 0, 1}."""
    for t in traces:
        t = int(t)
        if abs(t) > n or (t - n) % 2:
            raise NumerologyError(f"{t} is not the trace of an involution in dimension {n}", code="parity")
    return all(t in (-1, 0, 1) for t in traces)


@dataclass(frozen=True)
class SelmerInput:
    h1_dual: int
    h0_ad: int
    h0_ad1: int
    local_terms: tuple = ()
    h0_T_and_infty: int = 0

    def __post_init__(self):
        vals = [self.h1_dual, self.h0_ad, self.h0_ad1, self.h0_T_and_infty, *self.local_terms]
        if any(not isinstance(v, int) or v < 0 for v in vals):
            raise NumerologyError("Selmer inputs must be nonnegative integers", code="selmer")


def selmer_difference(inp: SelmerInput) -> int:
    return inp.h1_dual + inp.h0_ad - inp.h0_ad1 + sum(inp.local_terms) - inp.h0_T_and_infty


def tw_generator_count(q, T_size, s: SignatureInput) -> int:
    """Number of power-series variables g; negative values are returned with a warning."""
    g = q + T_size - 1 - s.degree * s.n * (s.n - 1) // 2 - invariants(s).l0
    if g < 0:
        warnings.warn(f"negative generator count {g}: inconsistent configuration", stacklevel=2)
    return g


def rloc_dimension(n, SpR_size, s: SignatureInput) -> int:
    if n != s.n:
        raise NumerologyError(f"n = {n} disagrees with the signature's n = {s.n}", code="signature")
    return 1 + SpR_size * (n * n - 1) + s.degree * n * (n - 1) // 2


@dataclass
class TowerShape:
    """Dimension bookkeeping for the patched ring with j = n^2 |T| - 1 framing variables."""

    j: int
    g: int
    rloc: int
    dim_R_inf: int
    expected: int
    consistent: bool = field(default=False)


def tower_shape(q, T_size, s: SignatureInput) -> TowerShape:
    """Compare dim R_loc + g with 1 + j + q - l0 (framing at the places of T)."""
    j = s.n * s.n * T_size - 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g = tw_generator_count(q, T_size, s)
    rloc = rloc_dimension(s.n, T_size, s)
    l0 = invariants(s).l0
    dim_inf = rloc + g
    expected = 1 + j + q - l0
    return TowerShape(j, g, rloc, dim_inf, expected, dim_inf == expected)


def l0_vanishes_characterization(s: SignatureInput):
    """l0 = 0 exactly when n = 1, or n <= 2 and F is totally real."""
    return (invariants(s).l0 == 0) == (s.n == 1 or (s.r2 == 0 and s.n <= 2))


def exhaustive_check(n_max=200, r_max=20):
    """Run integrality, the archimedean identity and the l0 characterization over a grid."""
    cases = failures = 0
    first = None
    for n in range(1, n_max + 1):
        for r1 in range(r_max + 1):
            for r2 in range(r_max + 1):
                if r1 + 2 * r2 == 0:
                    continue
                s = SignatureInput(n, r1, r2)
                cases += 1
                try:
                    ok = check_infinity_identity(s)[2] and l0_vanishes_characterization(s)
                except NumerologyError:
                    ok = False
                if not ok:
                    failures += 1
                    first = first or (n, r1, r2)
    return {"cases": cases, "failures": failures, "first_failure": first}
