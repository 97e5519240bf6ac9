from itertools import combinations

import numpy as np
import pytest

from patchlab.errors import BoundTooSmall, GradedError
from patchlab.generators import random_monomial_ideal
from patchlab.graded import (GradedComplex, buchberger, check_depth_bound, check_length_criterion,
                             cyclic_module, depth_pd, direct_sum, free_module, graded_koszul, hilbert_data,
                             minimal_free_resolution, monomial_quotient, nearly_faithful)
from patchlab.graded.modules import GradedModule, annihilator, stabilization_bound, variable
from patchlab.graded.oracles import monomial_dimension, standard_monomial_counts
from patchlab.graded.poly import poly_vec
from patchlab.rings import graded_ring

x, y = variable(2, 0), variable(2, 1)


def test_groebner_examples():
    G = buchberger([{(0, (2, 0)): 1, (0, (1, 1)): 1}, {(0, (1, 1)): 1}], 2, 2, (0,))
    assert sorted(G.leads) == [(0, (1, 1)), (0, (2, 0))]
    assert all(len(g) == 1 for g in G.basis)
    f = {(0, (1, 1)): 1, (0, (0, 2)): 2}
    G = buchberger([f], 3, 2, (0,))
    assert G.basis == [f]


def test_inhomogeneous_rejected():
    with pytest.raises(GradedError):
        buchberger([{(0, (1, 0)): 1, (0, (0, 0)): 1}], 3, 2, (0,))


def test_hilbert_examples():
    h = hilbert_data(free_module(graded_ring(3, 2)), 6)
    assert h.values == [d + 1 for d in range(7)] and h.krull_dim == 2
    h = hilbert_data(monomial_quotient(3, 2, [(1, 0)]), 6)
    assert h.values == [1] * 7 and h.krull_dim == 1
    h = hilbert_data(monomial_quotient(2, 2, [(2, 0), (1, 1)]), 8)
    assert h.values[:4] == [1, 2, 1, 1] and set(h.values[2:]) == {1} and h.krull_dim == 1


def test_hilbert_bound_too_small():
    M = monomial_quotient(3, 2, [(2, 0), (1, 1)])
    with pytest.raises(BoundTooSmall):
        hilbert_data(M, stabilization_bound(M) - 1)


@pytest.mark.parametrize("gens,ranks,depth,pd", [
    ([(1, 0), (0, 1)], [1, 2, 1], 0, 2),
    ([(1, 0)], [1, 1], 1, 1),
    ([(2, 0), (1, 1)], [1, 2, 1], 0, 2),
])
def test_resolution_and_depth_examples(gens, ranks, depth, pd):
    for p in (2, 3, 5):
        M = monomial_quotient(p, 2, gens)
        res = minimal_free_resolution(M)
        assert res.ranks == ranks and res.minimal and res.exact
        rep = depth_pd(M)
        assert (rep.depth, rep.proj_dim) == (depth, pd)
        assert rep.oracle["status"] == "confirmed"


def test_zero_module_has_no_depth():
    with pytest.raises(GradedError):
        depth_pd(monomial_quotient(3, 2, [(0, 0)]))


def test_random_monomial_quotients_against_oracles():
    rng = np.random.default_rng(12)
    for _ in range(25):
        q = int(rng.integers(1, 4))
        gens = random_monomial_ideal(q, rng)
        M = monomial_quotient(3, q, gens)
        rep = depth_pd(M, oracle=False)
        assert rep.depth + rep.proj_dim == q
        h = hilbert_data(M, stabilization_bound(M) + 1)
        assert h.krull_dim == monomial_dimension(q, gens)
        assert h.values == standard_monomial_counts(q, gens, len(h.values) - 1)


def test_depth_bound_examples():
    S = graded_ring(3, 2)
    assert check_depth_bound(free_module(S), [poly_vec(x)]) == {"depth_N": 2, "dim_M": 2, "holds": True}
    assert check_depth_bound(cyclic_module(S, [x]), [poly_vec(y)]) == {"depth_N": 1, "dim_M": 1, "holds": True}
    r = check_depth_bound(cyclic_module(S, [x, y]), [poly_vec({(0, 0): 1})])
    assert r["depth_N"] == 0 and r["holds"]
    with pytest.raises(GradedError):
        check_depth_bound(cyclic_module(S, [x]), [poly_vec(x)])


def test_length_criterion_on_koszul_complexes():
    for q in range(1, 4):
        for l in range(1, q + 1):
            for sub in combinations(range(q), l):
                rep = check_length_criterion(graded_koszul(3, q, sub), l)
                assert rep["verdict"] == f"resolution of top cohomology, pd = {l}, depth = {q - l}"


def test_length_criterion_edge_cases():
    S = graded_ring(3, 2)
    zero_map = GradedComplex(S, 0, [(0,), (0,)], [[{}]])
    rep = check_length_criterion(zero_map, 1)
    assert rep["codim"] == 0 and rep["conclusions"] is None
    assert rep["verdict"].startswith("codim 0 < l0 = 1")
    with pytest.raises(GradedError) as exc:
        check_length_criterion(graded_koszul(3, 2, [0, 1]), 1)
    assert exc.value.code == "degree-window"
    R = graded_ring(3, 2, [[(1, (1, 1))]])
    with pytest.raises(GradedError) as exc:
        check_length_criterion(GradedComplex(R, 0, [(0,)], []), 0)
    assert exc.value.code == "not-regular"


def test_nearly_faithful_examples():
    R = graded_ring(3, 2, [[(1, (1, 1))]])
    assert nearly_faithful(free_module(R), [[x], [y]])["verdict"] == "nearly-faithful"
    assert nearly_faithful(cyclic_module(R, [x]), [[x], [y]])["verdict"] == "not-nearly-faithful"
    both = direct_sum(cyclic_module(R, [x]), cyclic_module(R, [y]))
    assert nearly_faithful(both, [[x], [y]])["verdict"] == "nearly-faithful"
    with pytest.raises(GradedError):
        nearly_faithful(free_module(R), [])


def test_annihilator_of_sum():
    S = graded_ring(2, 2)
    ann = annihilator(direct_sum(cyclic_module(S, [x]), cyclic_module(S, [y])))
    assert ann == [{(1, 1): 1}]


def test_module_json_round_trip():
    M = cyclic_module(graded_ring(5, 3), [variable(3, 0), {(0, 2, 0): 1, (1, 1, 0): 4}])
    N = GradedModule.from_json(M.to_json())
    assert N.ring == M.ring and N.relations == M.relations
    K = graded_koszul(5, 3, [0, 2])
    assert GradedComplex.from_json(K.to_json()).diffs == K.diffs
