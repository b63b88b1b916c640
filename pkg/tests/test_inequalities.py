import itertools
import json
import math

import numpy as np
import pytest
from scipy import integrate

from opideal.inequalities import (
    FAMILIES,
    ConstantTable,
    check_cotype_family,
    check_grothendieck,
    check_mega,
    cotype2_lq,
    estimate_cotype,
    khintchine_lower,
    khintchine_upper,
)
from opideal.kompact import kappa_norm
from opideal.spaces import INF
from opideal.summing import OperatorMatrix, operator_norm


def gaussian_moment(r):
    f = lambda t: abs(t) ** r * math.exp(-t * t / 2) / math.sqrt(2 * math.pi)
    return integrate.quad(f, -np.inf, np.inf)[0] ** (1 / r)


def rademacher_moment(a, r):
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=len(a))))
    return float((np.abs(signs @ a) ** r).mean() ** (1 / r))


# -- constants ---------------------------------------------------------------------


@pytest.mark.parametrize("r", [2.5, 3.0, 4.0, 6.0])
def test_khintchine_upper_is_the_gaussian_moment(r):
    assert khintchine_upper(r) == pytest.approx(gaussian_moment(r), rel=1e-8)


def test_khintchine_small_r_and_inequality():
    assert khintchine_upper(1.5) == 1.0 == khintchine_upper(2)
    rng = np.random.default_rng(0)
    for r in (3.0, 4.0):
        for _ in range(20):
            a = rng.standard_normal(6)
            assert rademacher_moment(a, r) <= khintchine_upper(r) * np.linalg.norm(a) + 1e-12


def test_khintchine_lower():
    # equality at a = (1, 1) for q = 1
    a = np.array([1.0, 1.0])
    assert khintchine_lower(1.0) == pytest.approx(rademacher_moment(a, 1) / np.linalg.norm(a))
    rng = np.random.default_rng(1)
    for q in (1.0, 1.5, 1.9):
        for _ in range(20):
            a = rng.standard_normal(5)
            assert khintchine_lower(q) * np.linalg.norm(a) <= rademacher_moment(a, q) + 1e-12


def test_cotype_constants():
    assert cotype2_lq(2) == 1.0
    assert cotype2_lq(1) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        cotype2_lq(3)
    # Hilbert space: the parallelogram law makes the cotype-2 ratio exactly one
    assert estimate_cotype(2, 2, 3, terms=3, restarts=2) == pytest.approx(1.0, abs=1e-6)


def test_constant_table_round_trip(tmp_path):
    t = ConstantTable(K_G=1.8, c=2.0, overrides={"B_4": 1.5})
    path = tmp_path / "c.json"
    path.write_text(json.dumps(t.to_dict()))
    t2 = ConstantTable.load(path)
    assert t2.K_G == 1.8 and t2.c == 2.0 and t2.B(4) == 1.5
    assert "K_G" in t2.provenance
    with pytest.raises(ValueError):
        ConstantTable(K_G=0.5)


# -- Grothendieck ------------------------------------------------------------------------


def test_grothendieck_rank_one_margin():
    T = OperatorMatrix.rank_one([1.0, 2.0, -1.0], [1.0, 0.5, -0.3], 2, INF)
    rep = check_grothendieck(operators=[T])
    norm = operator_norm(T).upper
    assert rep.worst_margin == pytest.approx((1.78222 - 1) * norm, rel=1e-6)
    assert rep.passed


def test_grothendieck_zero_and_sign_matrix():
    Z = OperatorMatrix.from_array(np.zeros((3, 3)), 2, INF)
    assert check_grothendieck(operators=[Z]).worst_margin == 0
    signs = np.random.default_rng(3).choice([-1.0, 1.0], (3, 3))
    rep = check_grothendieck(operators=[OperatorMatrix.from_array(signs, 2, INF)])
    assert rep.passed and rep.instances == 1


def test_grothendieck_random():
    rep = check_grothendieck((3, 3), samples=10, seed=5)
    assert rep.passed and rep.instances + rep.excluded == 10


# -- transfer inequality -------------------------------------------------------------------


def test_mega_reflexive_and_zero():
    T = OperatorMatrix.from_array([[1.0, 2.0], [0.5, -1.0]], 2, 1)
    assert check_mega(T, 2, 2, 1.0).passed
    Z = OperatorMatrix.from_array(np.zeros((2, 2)), 2, 2)
    assert check_mega(Z, 1, 2, 1.0).passed


def test_mega_with_transferred_constant():
    # kappa_2 <= B_4 C_2(l_2) kappa_4 for operators on l_2
    rng = np.random.default_rng(4)
    A = ConstantTable().B(4) * ConstantTable().C2(2)
    for _ in range(3):
        T = OperatorMatrix.from_array(rng.uniform(-1, 1, (3, 3)), 2, 1)
        assert check_mega(T, 2, 4, A).passed


def test_mega_with_unit_constant_is_not_monotonicity():
    # kappa_1 > kappa_2 on the Hilbert identity: A = 1 cannot hold for r < s
    T = OperatorMatrix.identity(3, 2, 2)
    assert kappa_norm(T, 1).lower > kappa_norm(T, 2).upper
    assert not check_mega(T, 1, 2, 1.0).passed


def test_mega_order():
    with pytest.raises(ValueError):
        check_mega(OperatorMatrix.identity(2, 2, 2), 2, 1, 1.0)


# -- cotype families ------------------------------------------------------------------------


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_zero_operator_passes(family):
    us, vs = FAMILIES[family][:2]
    Z = OperatorMatrix.from_array(np.zeros((2, 2)), us[0], vs[0])
    rep = check_cotype_family(family, operators=[Z])
    assert rep.passed in (True, None)
    assert rep.worst_margin >= 0


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_family_small_sample(family):
    rep = check_cotype_family(family, samples=4, seed=11)
    assert rep.instances + rep.excluded == 4
    assert rep.passed in (True, None)
    assert rep.min_c is not None


def test_nohipo_b_on_l1():
    rng = np.random.default_rng(2)
    ops = [OperatorMatrix.from_array(rng.uniform(-1, 1, (3, 3)), 2, 1) for _ in range(2)]
    ops = [OperatorMatrix.from_array(o.entries, 2, 2) for o in ops]
    rep = check_cotype_family("nohipo-b", operators=ops)
    assert rep.instances == 2 and len(rep.margins) == 2
    assert rep.min_c is not None and rep.passed is None


def test_identity_constants_reduce_to_monotonicity():
    t = ConstantTable()
    assert t.B(2) == 1.0 and t.C2(2) == 1.0


def test_min_c_grows_with_the_sample():
    rng = np.random.default_rng(8)
    ops = [OperatorMatrix.from_array(rng.uniform(-1, 1, (2, 2)), 1, 2) for _ in range(4)]
    a = check_cotype_family("nohipo-b", operators=ops[:2]).min_c
    b = check_cotype_family("nohipo-b", operators=ops).min_c
    assert b >= a


def test_unknown_family():
    with pytest.raises(KeyError):
        check_cotype_family("nope")
