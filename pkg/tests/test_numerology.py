import warnings

import pytest
from hypothesis import given, strategies as st

from patchlab.errors import NumerologyError
from patchlab.numerology import (SelmerInput, SignatureInput, check_infinity_identity, exhaustive_check,
                                 invariants, oddness, rloc_dimension, selmer_difference, tower_shape,
                                 tw_generator_count)


@pytest.mark.parametrize("sig,l0,q0,dimY", [
    ((2, 0, 1), 1, 1, 3),
    ((2, 1, 0), 0, 1, 2),
    ((3, 1, 1), 3, 5, 13),
    ((1, 4, 0), 0, 0, 0),
])
def test_invariants(sig, l0, q0, dimY):
    inv = invariants(SignatureInput(*sig))
    assert (inv.l0, inv.q0, inv.dimY) == (l0, q0, dimY)
    assert inv.dimY == 2 * inv.q0 + inv.l0


@pytest.mark.parametrize("sig,lhs", [((2, 1, 0), 1), ((3, 1, 1), 12), ((1, 2, 3), 0)])
def test_infinity_identity(sig, lhs):
    assert check_infinity_identity(SignatureInput(*sig)) == (lhs, lhs, True)


@given(st.integers(1, 60), st.integers(0, 12), st.integers(0, 12))
def test_identity_and_integrality_random(n, r1, r2):
    if r1 + 2 * r2 == 0:
        return
    s = SignatureInput(n, r1, r2)
    inv = invariants(s)
    assert min(inv.l0, inv.q0) >= 0 and check_infinity_identity(s)[2]
    assert (inv.l0 == 0) == (n == 1 or (r2 == 0 and n <= 2))


def test_bad_signatures():
    for args in ((0, 1, 0), (2, 0, 0), (2, -1, 1)):
        with pytest.raises(NumerologyError):
            SignatureInput(*args)


def test_oddness():
    assert oddness([0], 2)
    assert oddness([1], 3) and oddness([-1], 3) and not oddness([3], 3)
    assert oddness([0], 4) and not oddness([2], 4)
    with pytest.raises(NumerologyError) as exc:
        oddness([1], 2)
    assert exc.value.code == "parity"
    with pytest.raises(NumerologyError):
        oddness([5], 3)


def test_selmer_difference():
    assert selmer_difference(SelmerInput(0, 0, 0)) == 0
    assert selmer_difference(SelmerInput(0, 0, 0, (1,) * 4)) == 4
    assert selmer_difference(SelmerInput(2, 1, 0, (1, 2), 4)) == 2
    with pytest.raises(NumerologyError):
        SelmerInput(-1, 0, 0)


def test_tw_generator_count():
    assert tw_generator_count(1, 1, SignatureInput(2, 1, 0)) == 0
    assert tw_generator_count(3, 2, SignatureInput(2, 0, 1)) == 1
    assert tw_generator_count(0, 1, SignatureInput(1, 1, 0)) == 0
    with pytest.warns(UserWarning):
        assert tw_generator_count(0, 1, SignatureInput(2, 0, 1)) == -3


def test_rloc_dimension():
    assert rloc_dimension(2, 1, SignatureInput(2, 1, 0)) == 5
    assert rloc_dimension(1, 3, SignatureInput(1, 1, 0)) == 1
    assert rloc_dimension(2, 2, SignatureInput(2, 0, 1)) == 9
    with pytest.raises(NumerologyError):
        rloc_dimension(3, 1, SignatureInput(2, 1, 0))


@pytest.mark.parametrize("q,T,sig", [(1, 1, (2, 1, 0)), (3, 2, (2, 0, 1)), (2, 1, (3, 1, 1))])
def test_tower_shape_consistent(q, T, sig):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sh = tower_shape(q, T, SignatureInput(*sig))
    assert sh.consistent and sh.j == sig[0] ** 2 * T - 1


def test_exhaustive_small_grid():
    res = exhaustive_check(30, 6)
    assert res["failures"] == 0 and res["cases"] == 30 * (7 * 7 - 1)
