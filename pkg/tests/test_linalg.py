import itertools

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from patchlab import linalg
from patchlab.linalg import FiniteModule, Matrix, kernel_image_cokernel, mm, smith, smith_normal_form
from patchlab.rings import chain, group_algebra, make_ring, prime_field


def _diag(A, p, m):
    _, D, _ = smith_normal_form(Matrix(chain(p, m), np.array(A)))
    return [int(x) for x in np.diag(D.entries)]


def test_snf_examples_over_z4():
    assert _diag([[1, 0], [0, 1]], 2, 2) == [1, 1]
    assert _diag([[2, 0], [0, 1]], 2, 2) == [1, 2]
    assert _diag([[2, 2], [2, 2]], 2, 2) == [2, 0]


@st.composite
def chain_matrices(draw):
    p = draw(st.sampled_from([2, 3, 5]))
    m = draw(st.integers(1, 3))
    r, c = draw(st.integers(1, 7)), draw(st.integers(1, 7))
    flat = draw(st.lists(st.integers(0, p**m - 1), min_size=r * c, max_size=r * c))
    return p, m, np.array(flat, dtype=np.int64).reshape(r, c)


@settings(max_examples=150, deadline=None)
@given(chain_matrices())
def test_snf_certificate(data):
    p, m, A = data
    mod = p**m
    s = smith(A, p, m)
    assert np.array_equal(mm(mm(s.U, A, mod), s.V, mod), s.diagonal() % mod)
    assert np.array_equal(mm(s.U, s.Uinv, mod), np.eye(A.shape[0], dtype=np.int64))
    assert np.array_equal(mm(s.V, s.Vinv, mod), np.eye(A.shape[1], dtype=np.int64))
    assert s.vals == sorted(s.vals)


def test_blocked_path_matches_direct():
    rng = np.random.default_rng(3)
    A = rng.integers(0, 27, (90, 80))
    # both routines eliminate in place
    a = linalg._smith_blocked(A.copy(), 3, 3, True, True)
    b = linalg._smith_direct(A.copy(), 3, 3, True, True)
    assert a.vals == b.vals
    assert np.array_equal(mm(mm(a.U, A, 27), a.V, 27), a.diagonal())


def test_kernel_image_cokernel():
    ker, im, coker = kernel_image_cokernel(Matrix(prime_field(5), np.zeros((2, 2), dtype=np.int64)))
    assert ker.exps == (1, 1) and im.exps == () and coker.exps == (1, 1)
    ker, im, coker = kernel_image_cokernel(Matrix(chain(2, 2), np.array([[2]])))
    assert ker.exps == im.exps == coker.exps == (1,)
    ker, im, coker = kernel_image_cokernel(Matrix(chain(2, 2), np.array([[1]])))
    assert ker.exps == coker.exps == ()


def test_underlying_abelian_regular_representation():
    R = make_ring(group_algebra(3, 1, 1, 1))
    g = R.generator("g1")
    P = linalg.underlying_abelian(R, g.reshape(1, 1, 3))
    assert sorted(P.sum(axis=0).tolist()) == [1, 1, 1] and sorted(P.sum(axis=1).tolist()) == [1, 1, 1]
    assert np.array_equal(mm(mm(P, P, 3), P, 3), np.eye(3, dtype=np.int64))
    x = (g - R.one()) % 3
    assert linalg.rank_mod_p(linalg.underlying_abelian(R, x.reshape(1, 1, 3)), 3) == 2
    assert not np.any(linalg.underlying_abelian(R, np.zeros((1, 1, 3), dtype=np.int64)))


def _brute_order(A, B, p, m):
    mod = p**m
    n = B.shape[1]
    ker = sum(1 for v in itertools.product(range(mod), repeat=n) if not np.any(B @ np.array(v) % mod))
    im = {tuple(A @ np.array(v) % mod) for v in itertools.product(range(mod), repeat=A.shape[1])}
    return ker // len(im)


def test_subquotient_against_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(60):
        p, m = int(rng.choice([2, 3])), int(rng.integers(1, 3))
        mod = p**m
        n = int(rng.integers(1, 4))
        B = rng.integers(0, mod, (int(rng.integers(1, 3)), n)) * p ** int(rng.integers(0, 2)) % mod
        ker = [np.array(v) for v in itertools.product(range(mod), repeat=n) if not np.any(B @ np.array(v) % mod)]
        A = np.stack([ker[i] for i in rng.integers(0, len(ker), 2)], axis=1)
        S = linalg.subquotient(A, B, p, m)
        assert p ** sum(S.exps) == _brute_order(A, B, p, m)
        assert not np.any(S.coords(A))
        mods = np.array([p**e for e in S.exps]).reshape(-1, 1)
        assert np.array_equal(S.coords(S.gens) % mods, np.eye(len(S.exps), dtype=np.int64) % mods)


def test_kernel_generators_and_span():
    B = np.array([[3, 0], [0, 1]])
    K = linalg.kernel_generators(B, 3, 2)
    assert not np.any(mm(B, K, 9))
    assert linalg.columns_in_span(K, np.array([[3], [0]]), 3, 2).all()
    assert not linalg.columns_in_span(K, np.array([[0], [1]]), 3, 2).any()


def test_finite_module_basics():
    M = FiniteModule(3, (2, 1))
    assert M.order == 27 and M.length == 3 and M.exponent == 2
    assert linalg.is_isomorphism(M, M, M.identity())
    assert not linalg.is_injective(M, M, np.array([[3, 0], [0, 1]]))
