import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opideal.config import RunConfig
from opideal.kompact import kappa_norm
from opideal.nuclear import (
    Decomposition,
    check_ell1_identity,
    decomposition_cost,
    nuclear_dp,
    nuclear_gp,
)
from opideal.spaces import INF, SpaceSpec, lp_norm
from opideal.summing import OperatorMatrix, transpose

from conftest import random_op

REL = 0.05
TOL = 1e-6


def _rank_one(u, v):
    f, y = np.array([1.0, -2.0, 0.5]), np.array([0.5, 1.0])
    T = OperatorMatrix.rank_one(f, y, u, v)
    return T, lp_norm(f, SpaceSpec(3, u).dual().u) * lp_norm(y, v)


@pytest.mark.parametrize("estimator", [nuclear_dp, nuclear_gp])
@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
@pytest.mark.parametrize("u, v", [(2, 2), (1, INF), (INF, 1)])
def test_rank_one(estimator, p, u, v):
    T, target = _rank_one(u, v)
    est = estimator(T, p)
    assert est.upper == pytest.approx(target, rel=1e-5)
    assert est.lower <= est.upper


@pytest.mark.parametrize("estimator", [nuclear_dp, nuclear_gp])
def test_zero(estimator):
    est = estimator(OperatorMatrix.from_array(np.zeros((2, 2)), 2, 2), 2)
    assert (est.lower, est.upper) == (0.0, 0.0)


def test_l1_domain_matches_kappa():
    T = OperatorMatrix.from_array([[1.0, -0.5], [0.3, 2.0]], 1, 2)
    nu, kap = nuclear_dp(T, 2), kappa_norm(T, 2)
    assert nu.upper <= kap.lower * (1 + REL)
    assert nu.upper >= kap.lower - TOL


@given(st.integers(0, 10_000), st.sampled_from([1.0, 2.0, INF]), st.sampled_from([1.0, 2.0, INF]))
def test_p_one_flavors_coincide(seed, u, v):
    T = random_op(np.random.default_rng(seed), 2, 3, u, v)
    a, b = nuclear_dp(T, 1).upper, nuclear_gp(T, 1).upper
    assert abs(a - b) <= REL * max(a, b)


def test_decomposition_reconstructs_and_recosts():
    T = OperatorMatrix.from_array([[1.0, 2.0, 0.0], [-1.0, 0.5, 1.0]], 2, 4)
    for f in (nuclear_dp, nuclear_gp):
        est = f(T, 2)
        dec = Decomposition.from_dict(est.upper_witness)
        np.testing.assert_allclose(dec.matrix(), T.entries, atol=1e-6)
        assert decomposition_cost(dec, np.random.default_rng(0)) <= est.upper * (1 + 1e-6)


def test_budget_below_rank_rejected():
    with pytest.raises(ValueError):
        nuclear_dp(OperatorMatrix.identity(3, 2, 2), 2, rank_budget=2)


def test_identity_check_examples():
    rep = check_ell1_identity(OperatorMatrix.identity(2, 1, 1), 1)
    assert rep.passed
    T, target = _rank_one(1, 2)
    rep = check_ell1_identity(T, 2)
    assert rep.passed
    assert rep.nuclear_upper == pytest.approx(target, rel=1e-6)
    assert rep.kappa_lower == pytest.approx(target, rel=1e-6)
    A = np.random.default_rng(7).uniform(-1, 1, (3, 3))
    assert check_ell1_identity(OperatorMatrix.from_array(A, 1, 2), 2).passed


def test_identity_check_needs_l1_domain():
    with pytest.raises(ValueError):
        check_ell1_identity(OperatorMatrix.identity(2, 2, 2), 2)


@given(st.integers(0, 10_000), st.sampled_from([1.0, 2.0, INF]), st.sampled_from([1.0, 2.0, 4.0]))
def test_kappa_below_nuclear(seed, u, p):
    T = random_op(np.random.default_rng(seed), 2, 2, u, 2)
    assert kappa_norm(T, p).lower <= nuclear_dp(T, p).upper + TOL


@given(st.integers(0, 10_000))
def test_monotone_in_rank_budget(seed):
    T = random_op(np.random.default_rng(seed), 2, 2, 2, INF)
    cfg = RunConfig(seed=seed)
    costs = [nuclear_gp(T, 2, rank_budget=k, config=cfg).upper for k in (2, 4)]
    assert costs[1] <= costs[0] * (1 + 1e-6)


@given(st.integers(0, 10_000), st.sampled_from([1.0, 2.0, INF]), st.sampled_from([1.0, 2.0]))
def test_transpose_swaps_flavors(seed, u, v):
    T = random_op(np.random.default_rng(seed), 2, 2, u, v)
    a, b = nuclear_gp(T, 2).upper, nuclear_dp(transpose(T), 2).upper
    assert abs(a - b) <= REL * max(a, b)
