import numpy as np
import pytest

from patchlab.complexes import cohomology
from patchlab.errors import PatchingError
from patchlab.graded import cyclic_module, free_module
from patchlab.graded.modules import variable
from patchlab.patching import (GeneratorAction, Link, TowerConfig, augmentation_tower, faithfulness_check,
                               fingerprint, free_tower, identity_link, make_datum, patch, patch_pair,
                               reduce_datum)
from patchlab.rings import graded_ring, make_ring


@pytest.fixture(scope="module")
def free():
    return free_tower(p=3, m=2, q=1, levels=3)


@pytest.fixture(scope="module")
def aug():
    return augmentation_tower(p=3, m=1, q=1, l0=1, levels=3)


def test_tower_dimension_is_validated():
    with pytest.raises(PatchingError):
        free_tower(q=1, dim=5)
    with pytest.raises(PatchingError):
        augmentation_tower(q=1, l0=2)
    with pytest.raises(PatchingError):
        free_tower(generators=[GeneratorAction("x1", "g1", 1, 1)])


def test_tower_json_round_trip(free):
    t = TowerConfig.from_json(free.to_json())
    assert t.to_json() == free.to_json()


def test_free_datum_base_level(free):
    d = make_datum(free, 1, 1)
    assert d.P.ranks == [1] and d.P.lo == 0 and d.P.ring == free.ring(1)
    assert d.checks["psi_iso"] and d.checks["psi_equivariant"]


def test_augmentation_datum(aug):
    d = make_datum(aug, 2, 1)
    assert d.P.ranks == [1, 1] and d.P.ring == aug.ring(1)
    R = make_ring(aug.ring(1))
    expected = (R.generator("g1") - R.one()) % R.mod
    assert np.array_equal(d.P.diffs[0].reshape(-1) % R.mod, expected)


def test_level_order_errors(free):
    with pytest.raises(PatchingError) as exc:
        make_datum(free, 1, 2)
    assert exc.value.code == "level-order"
    with pytest.raises(PatchingError):
        reduce_datum(free, make_datum(free, 1, 1), 2)
    with pytest.raises(PatchingError) as exc:
        make_datum(free, 4, 1)
    assert exc.value.code == "missing-level"


def test_fingerprints(free):
    assert fingerprint(make_datum(free, 2, 2)) == fingerprint(make_datum(free, 2, 2))
    assert fingerprint(make_datum(free, 2, 1)) == fingerprint(make_datum(free, 3, 1))
    other = free_tower(p=3, m=2, q=1, levels=3, generators=[GeneratorAction("x1", "g1", 1, 3)])
    assert fingerprint(make_datum(free, 2, 2)) != fingerprint(make_datum(other, 2, 2))


def test_reduce_datum(free, aug):
    d = make_datum(free, 2, 2)
    assert reduce_datum(free, d, 2) is d
    r = reduce_datum(free, d, 1)
    assert r.P.ranks == [1] and make_ring(r.P.ring).mod == 3
    d = make_datum(aug, 2, 2)
    assert fingerprint(reduce_datum(aug, d, 1)) == fingerprint(make_datum(aug, 2, 1))


def test_patch_free(free):
    r = patch(free, 3)
    assert r.chain == [(1, 1), (2, 2), (3, 3)]
    assert all(P.ranks == [1] for P in r.truncations)
    assert r.top.psi_coh.tolist() == [[1]]
    rep = r.report
    assert rep["pass"] and rep["compatible_chain"]
    assert rep["depth"]["certificate"]["sequence"] == ["pi", "g1-1"]
    assert rep["depth"]["target_depth"] == 2
    f = faithfulness_check(r)
    assert f["verdict"] == "free" and f["rank"] == 1
    for (_, N), lv in zip(r.chain, f["levels"]):
        assert lv["log_p_H"] == lv["rank"] * lv["log_p_R"]


def test_patch_is_deterministic(free):
    assert patch(free, 3).to_json() == patch(free, 3).to_json()


def test_patch_augmentation(aug):
    r = patch(aug, 3)
    assert r.report["pass"]
    for (_, N), P in zip(r.chain, r.truncations):
        R = make_ring(P.ring)
        assert P.ranks == [1, 1]
        assert np.array_equal(P.diffs[0].reshape(-1) % R.mod, (R.generator("g1") - R.one()) % R.mod)
    lower = r.report["minimal_window"]["lower_cohomology"]
    assert any(entry["status"] == "limit-consistent" for entry in lower)
    assert r.report["depth"]["target_depth"] == 1
    assert faithfulness_check(r)["verdict"] == "inconclusive"


def test_patch_trivial_q0():
    r = patch(free_tower(p=3, m=2, q=0, levels=2), 2)
    assert r.report["pass"]
    assert all(P.ranks == [1] for P in r.truncations)
    H = cohomology(r.truncations[-1], 0, actions=False)
    assert list(H.exps) == [2]


def test_tampered_psi_cites_level():
    t = free_tower(p=3, m=1, q=1, levels=3, tamper={"level": 3, "psi_scale": 3})
    with pytest.raises(PatchingError) as exc:
        make_datum(t, 3, 3)
    assert exc.value.code == "psi-not-iso"
    rep = patch(t, 3).report
    assert not rep["comparison"]["pass"]
    assert rep["comparison"]["offending_levels"]
    assert all(o["source_level"] == 3 for o in rep["comparison"]["offending_levels"])


def test_patch_errors(free):
    with pytest.raises(PatchingError) as exc:
        patch(free, 4)
    assert exc.value.code == "tower-too-shallow"


def test_faithfulness_shadow():
    R = graded_ring(3, 2, [[(1, (1, 1))]])
    x, y = variable(2, 0), variable(2, 1)
    primes = [[x], [y]]
    base = dict(p=3, m=1, q=1, l0=1, levels=2, smooth=False)
    t = augmentation_tower(**base, shadow={"module": cyclic_module(R, [x]), "minimal_primes": primes})
    assert faithfulness_check(patch(t, 2))["verdict"] == "not-nearly-faithful"
    t = augmentation_tower(**base, shadow={"module": free_module(R), "minimal_primes": primes})
    assert faithfulness_check(patch(t, 2))["verdict"] == "nearly-faithful"


def test_pair_identity(free):
    r1, r2, rep = patch_pair(free, free, identity_link(free))
    assert rep["pass"] and r1.to_json() == r2.to_json()


def test_pair_unit_rescaling():
    t1 = free_tower(p=3, m=2, q=1, generators=[GeneratorAction("x1", "g1", 1, 3)])
    t2 = free_tower(p=3, m=2, q=1, generators=[GeneratorAction("x1", "g1", 4, 12)])
    r1, r2, rep = patch_pair(t1, t2, identity_link(t1))
    assert rep["pass"]
    assert r1.chain == r2.chain


def test_pair_corrupted_link(free):
    bad = Link({"x1": "x1"}, np.eye(1, dtype=np.int64), {2: [[2]]})
    with pytest.raises(PatchingError) as exc:
        patch_pair(free, free, bad)
    assert exc.value.code == "link-square" and "level 2" in str(exc.value)
