import numpy as np
import pytest

from patchlab.complexes import (Complex, base_change, check_complex, cohomology, koszul, minimize,
                                require_valid, residual_ranks, same_homology, single_module, two_term)
from patchlab.errors import ComplexError, RingError
from patchlab.generators import random_complex
from patchlab.rings import augment, chain, group_algebra, make_ring, mod_power, reduce_level

S = group_algebra(3, 1, 1, 1)
R = make_ring(S)
X = (R.generator("g1") - R.one()) % 3


def test_validity():
    assert check_complex(single_module(S))["valid"]
    F2 = group_algebra(2, 1, 1, 1)
    R2 = make_ring(F2)
    y = (R2.generator("g1") - R2.one()) % 2
    assert check_complex(Complex(F2, 0, [1, 1, 1], [y.reshape(1, 1, 2)] * 2))["valid"]
    bad = Complex(chain(2, 1), 0, [1, 1, 1], [np.ones((1, 1, 1), dtype=np.int64)] * 2)
    rep = check_complex(bad)
    assert not rep["valid"] and rep["failures"][0]["degree"] == 0
    with pytest.raises(ComplexError):
        require_valid(bad)


def test_shape_mismatch_rejected():
    with pytest.raises(ComplexError):
        Complex(S, 0, [1, 2], [np.zeros((1, 1, 3), dtype=np.int64)])


def test_base_change_examples():
    C = two_term(S, X)
    Ca = base_change(C, augment(S))
    assert Ca.ranks == [1, 1] and not np.any(Ca.diffs[0])
    C9 = two_term(chain(3, 2), [4])
    assert base_change(C9, mod_power(C9.ring, 1)).diffs[0].tolist() == [[[1]]]
    free = single_module(group_algebra(3, 1, 1, 2))
    assert base_change(free, reduce_level(free.ring, 1)).ranks == [1]
    with pytest.raises(RingError):
        base_change(C, augment(group_algebra(3, 2, 1, 1)))


def test_cohomology_examples():
    C = two_term(S, X)
    assert cohomology(C, 0).exps == (1,) and cohomology(C, 1).exps == (1,)
    C4 = two_term(chain(2, 2), [2])
    assert cohomology(C4, 0).exps == (1,) and cohomology(C4, 1).exps == (1,)
    Cu = two_term(S, (R.one() + X) % 3)
    assert cohomology(Cu, 0).exps == () and cohomology(Cu, 1).exps == ()
    assert cohomology(C, 7).exps == ()


def test_cohomology_carries_group_action():
    H1 = cohomology(two_term(S, X), 1)
    # gamma acts trivially on S/(gamma - 1)
    assert np.array_equal(H1.actions["g1"] % 3, np.eye(1, dtype=np.int64))


def test_minimize_examples():
    mn = minimize(two_term(chain(2, 2), [1]))
    assert mn.complex.ranks == [0, 0] and mn.certificate.minimal
    d = np.zeros((2, 2, 1), dtype=np.int64)
    d[0, 0], d[1, 1] = 1, 3
    C = Complex(chain(3, 2), 0, [2, 2], [d])
    mn = minimize(C)
    assert mn.complex.ranks == [1, 1] and mn.complex.diffs[0].tolist() == [[[3]]]
    assert residual_ranks(C) == [1, 1]
    K = two_term(S, X)
    assert minimize(K).complex == K


def test_minimization_maps_are_chain_maps_and_inverse_on_cohomology():
    rng = np.random.default_rng(4)
    C = random_complex(S, rng, length=2, max_rank=4)
    mn = minimize(C, track=True)
    P = mn.complex
    for k in range(len(C.diffs)):
        # f is a chain map C -> P, g a chain map P -> C
        assert np.array_equal(R.matmul(P.diffs[k], mn.f[k]), R.matmul(mn.f[k + 1], C.diffs[k]))
        assert np.array_equal(R.matmul(C.diffs[k], mn.g[k]), R.matmul(mn.g[k + 1], P.diffs[k]))
    for k, r in enumerate(P.ranks):
        assert np.array_equal(R.matmul(mn.f[k], mn.g[k]), R.eye(r))


def test_same_homology():
    rng = np.random.default_rng(9)
    C = random_complex(S, rng, length=2, max_rank=3)
    assert same_homology(C, minimize(C).complex)["verdict"] == "isomorphic"
    assert same_homology(C, C)["verdict"] == "isomorphic"
    # with d = 0 the cohomology is S itself, of length 3 rather than 1
    rep = same_homology(two_term(S, X), Complex(S, 0, [1, 1]))
    assert rep["verdict"] == "distinct"
    with pytest.raises(RingError):
        same_homology(two_term(S, X), two_term(chain(3, 1), [0]))


def test_koszul_complex_cohomology():
    K = koszul(S, [X, X])
    assert check_complex(K)["valid"]
    assert [cohomology(K, i, actions=False).exps for i in range(3)] == [(1,), (1, 1), (1,)]


def test_json_round_trip():
    K = koszul(S, [X])
    assert Complex.from_json(K.to_json()) == K
