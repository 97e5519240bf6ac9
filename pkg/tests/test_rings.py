import numpy as np
import pytest

from patchlab.errors import RingError, SizeCapError
from patchlab.rings import (RingSpec, VariableQuotient, apply_map, augment, chain, element, group_algebra,
                            inclusion, is_unit, make_ring, mod_power, reduce_level, ring_generator, ring_one,
                            trunc_ext)


def test_chain_ring_z9():
    R = make_ring(chain(3, 2))
    assert R.mod == 9 and R.size == 1
    assert R.mod ** R.size == 9
    assert not R.is_unit(R.scalar(3)) and R.is_unit(R.scalar(4))


def test_group_algebra_f3_z3_has_basis_powers_of_gamma():
    R = make_ring(group_algebra(3, 1, 1, 1))
    assert R.size == 3 and R.mod**R.size == 27
    g = R.generator("g1")
    assert np.array_equal(R.mul(R.mul(g, g), g), R.one())


def test_group_algebra_two_variables_mod4():
    R = make_ring(group_algebra(2, 2, 2, 1))
    assert R.size == 4 and R.mod == 4
    assert R.mod**R.size == 4**4


def test_non_prime_rejected():
    with pytest.raises(RingError):
        RingSpec(4, 1)


def test_size_cap(monkeypatch):
    monkeypatch.setenv("PATCHLAB_MAX_BASIS", "8")
    with pytest.raises(SizeCapError):
        make_ring(group_algebra(7, 1, 1, 2))  # uncached spec


def test_units():
    S = group_algebra(3, 1, 1, 1)
    g = ring_generator(S, "g1")
    one = ring_one(S)
    assert is_unit(one + (g - one))
    assert not is_unit(g - one)
    S9 = group_algebra(3, 2, 1, 1)
    x = element(S9, [3, 1, 0])  # 3 + gamma
    assert is_unit(x)


def test_maps():
    S = group_algebra(3, 2, 1, 1)
    g = ring_generator(S, "g1")
    assert np.array_equal(apply_map(augment(S), g).array, [1])
    x = element(S, [3, 1, 0])
    assert np.array_equal(apply_map(mod_power(S, 1), x).array, [0, 1, 0])
    S2 = group_algebra(2, 1, 1, 2)
    gamma = ring_generator(S2, "g1")
    img = apply_map(reduce_level(S2, 1), gamma * gamma)
    assert np.array_equal(img.array, ring_one(group_algebra(2, 1, 1, 1)).array)


def test_map_source_mismatch():
    with pytest.raises(RingError):
        apply_map(augment(group_algebra(3, 1, 1, 1)), ring_one(chain(3, 1)))


def test_inclusion_and_variable_quotient():
    S = group_algebra(3, 1, 1, 1)
    f = inclusion(S, 1, 2)
    assert f.dst == trunc_ext(3, 1, 1, 1, 1, 2)
    box = make_ring(f.dst)
    z = box.generator("z1")
    q = VariableQuotient(f.dst, (), (1,))
    assert not np.any(q.apply_array(z))
    assert q.dst == S
    kill_g = VariableQuotient(S, (1,))
    assert np.array_equal(kill_g.apply_array(make_ring(S).generator("g1")), [1])


def test_ring_json_round_trip():
    for spec in (chain(5, 3), group_algebra(2, 2, 2, 1), trunc_ext(3, 2, 1, 1, 2, 3),
                 RingSpec(3, q=2, relations=(((1, (1, 1)),),))):
        assert RingSpec.from_json(spec.to_json()) == spec
