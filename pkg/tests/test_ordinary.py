import numpy as np
import pytest

from patchlab.complexes import Complex, cohomology
from patchlab.errors import OperatorError
from patchlab.generators import random_module, random_operator_pair
from patchlab.linalg import FiniteModule
from patchlab.ordinary import (Operator, fitting_decomposition, idempotent_exponent, localization_projector,
                               ordinary_part_complex, stabilization_index, verify_fitting,
                               verify_ordinary_complex)
from patchlab.rings import chain, group_algebra, make_ring


def test_fitting_examples():
    M = FiniteModule(3, (2, 1))
    r = fitting_decomposition(M, M.identity())
    assert r.ordinary.exps == M.exps and r.nilpotent.exps == ()
    r = fitting_decomposition(M, np.zeros((2, 2), dtype=np.int64))
    assert r.ordinary.exps == ()
    F = FiniteModule(5, (1, 1))
    T = np.array([[1, 1], [0, 0]])
    r = fitting_decomposition(F, T)
    assert r.ordinary.exps == (1,)
    # the ordinary part is spanned by (1, 0)
    assert np.array_equal(r.ord_gens[:, 0] % 5 * pow(int(r.ord_gens[0, 0]), -1, 5) % 5, [1, 0])


def test_random_fitting_properties():
    rng = np.random.default_rng(2)
    for _ in range(60):
        p = int(rng.choice([2, 3, 5]))
        M = random_module(p, rng)
        T, A = random_operator_pair(M, rng)
        M.actions = {"g1": A}
        res = fitting_decomposition(M, T)
        assert verify_fitting(M, T, res)["ok"]
        k, _ = stabilization_index(M, T)
        assert k <= M.length


def test_non_commuting_operator_rejected():
    M = FiniteModule(3, (1, 1), {"g1": np.array([[1, 1], [0, 1]])})
    with pytest.raises(OperatorError):
        fitting_decomposition(M, np.array([[1, 0], [0, 0]]))


def test_idempotent_exponent_power_is_idempotent():
    M = FiniteModule(2, (3, 1))
    T = np.array([[3, 1], [0, 1]])
    n = idempotent_exponent(2, M.rank, M.exponent + 2, 2)
    e = M.power(T, n)
    assert np.array_equal(M.compose(e, e), e)


def test_ordinary_part_identity_and_projection():
    spec = chain(3, 2)
    C = Complex(spec, 0, [2, 1], [np.array([[[3], [0]]])])
    oc = ordinary_part_complex(C, Operator.identity(C))
    assert oc.complex.ranks == C.ranks
    T = Operator(C, [np.array([[[1], [0]], [[0], [0]]]), np.array([[[1]]])])
    oc = ordinary_part_complex(C, T)
    assert oc.complex.ranks == [1, 1]
    assert verify_ordinary_complex(C, T, oc)["ok"]


def test_ordinary_part_over_group_algebra():
    S = group_algebra(3, 1, 1, 1)
    R = make_ring(S)
    x = (R.generator("g1") - R.one()) % 3
    d = np.zeros((2, 2, 3), dtype=np.int64)
    d[1, 1] = x
    C = Complex(S, 0, [2, 2], [d])
    Tm = np.zeros((2, 2, 3), dtype=np.int64)
    Tm[0, 0], Tm[1, 1] = R.scalar(2), x
    T = Operator(C, [Tm, Tm])
    oc = ordinary_part_complex(C, T)
    assert oc.complex.ranks == [1, 1]
    assert verify_ordinary_complex(C, T, oc)["ok"]
    assert cohomology(oc.complex, 0, actions=False).exps == (1, 1, 1)


def test_not_a_chain_map():
    C = Complex(chain(3, 1), 0, [1, 1], [np.array([[[1]]])])
    T = Operator(C, [np.array([[[1]]]), np.array([[[2]]])])
    with pytest.raises(OperatorError):
        ordinary_part_complex(C, T)


def test_localization_projector():
    p = 5
    M = FiniteModule(p, (1, 1))
    T = Operator(M, [np.diag([2, 3])], "T")
    # (T - 2) is invertible exactly on the 3-eigenline; its ordinary part is that line
    P = localization_projector([(T, 2)], [])
    r = fitting_decomposition(M, P.matrix)
    assert r.ordinary.exps == (1,)
    assert np.array_equal(r.ord_gens[0] % p, [0])
    ident = localization_projector([], [], target=M)
    assert np.array_equal(ident.matrix, M.identity())
    N = FiniteModule(p, (1, 1, 1))
    A = Operator(N, [np.diag([1, 1, 0])], "A")
    B = Operator(N, [np.diag([1, 0, 1])], "B")
    r = fitting_decomposition(N, localization_projector([], [A, B]).matrix)
    assert r.ordinary.exps == (1,)
    with pytest.raises(OperatorError):
        localization_projector([], [A, Operator(N, [np.array([[0, 0, 1], [0, 0, 0], [0, 0, 0]])], "C")])
