import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opideal.spaces import (
    INF,
    InvalidExponentError,
    SpaceSpec,
    Vector,
    VectorSequence,
    as_exponent,
    dual_exponent,
    pco_membership,
    strong_p_norm,
    vector_norm,
    weak_p_norm,
)

exponents = st.sampled_from([1.0, 1.5, 2.0, 3.0, 4.0, 4.0 / 3.0, INF])


def seq(rows, u, p):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    return VectorSequence(rows, SpaceSpec(rows.shape[1], u), p)


# -- exponents ----------------------------------------------------------------


@pytest.mark.parametrize("u, expected", [(2, 2.0), (1, INF), (4, 4.0 / 3.0), (INF, 1.0)])
def test_dual_exponent_examples(u, expected):
    assert dual_exponent(u) == expected


def test_dual_exponent_rejects_below_one():
    with pytest.raises(InvalidExponentError):
        dual_exponent(0.5)


@given(st.fractions(min_value=1, max_value=50, max_denominator=1000) | st.just(INF))
def test_dual_exponent_is_an_involution(u):
    u = float(u)
    assert dual_exponent(dual_exponent(u)) == u


def test_exponent_parsing():
    assert as_exponent("inf") == INF
    assert as_exponent("4/3") == pytest.approx(4 / 3)
    with pytest.raises(InvalidExponentError):
        as_exponent("abc")


def test_space_spec_validation_and_json():
    with pytest.raises(ValueError):
        SpaceSpec(0, 2)
    s = SpaceSpec(3, INF)
    assert s.to_dict() == {"dim": 3, "u": "inf"}
    assert SpaceSpec.from_dict(s.to_dict()) == s
    assert s.dual() == SpaceSpec(3, 1)


def test_vector_length_must_match_space():
    with pytest.raises(ValueError):
        Vector([1.0, 2.0], SpaceSpec(3, 2))


# -- norms --------------------------------------------------------------------


@pytest.mark.parametrize("coords, u, expected", [
    ((3, 4), 2, 5.0), ((1, 1), 1, 2.0), ((1, -2), INF, 2.0),
])
def test_vector_norm_examples(coords, u, expected):
    assert vector_norm(Vector(coords, SpaceSpec(2, u))) == pytest.approx(expected)


def test_strong_norm_examples():
    assert strong_p_norm(seq(np.eye(2), 2, 2)) == pytest.approx(math.sqrt(2))
    for n in (3, 5):
        assert strong_p_norm(seq(np.eye(n), 2, 2)) == pytest.approx(math.sqrt(n))
    x = np.array([[1.0, -2.0, 2.0]])
    for p in (1, 2, 7, INF):
        assert strong_p_norm(seq(x, 2, p)) == pytest.approx(3.0)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_weak_norm_orthonormal_family(n):
    est = weak_p_norm(seq(np.eye(n), 2, 2), np.random.default_rng(0))
    assert est.lower == pytest.approx(1.0, abs=1e-9)
    assert est.upper == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("u", [1.0, 2.0, 3.0, INF])
@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_weak_norm_single_vector_is_its_norm(u, p):
    x = np.array([[0.3, -1.2, 0.7]])
    est = weak_p_norm(seq(x, u, p), np.random.default_rng(0))
    assert est.lower == pytest.approx(vector_norm(Vector(x[0], SpaceSpec(3, u))), rel=1e-7)


def test_weak_norm_repeated_vector_against_circle_scan():
    s = seq([[1.0, 0.0], [1.0, 0.0]], 2, 1)
    est = weak_p_norm(s, np.random.default_rng(0))
    # oracle: brute force over a fine grid of the unit circle
    t = np.linspace(0, 2 * np.pi, 20001)
    X = np.stack([np.cos(t), np.sin(t)], axis=1)
    oracle = np.abs(X @ s.items.T).sum(axis=1).max()
    assert oracle == pytest.approx(2.0, abs=1e-8)
    assert est.lower == pytest.approx(oracle, abs=1e-7)


@given(st.integers(0, 10_000), exponents, st.sampled_from([1.0, 2.0, 3.0]),
       st.integers(1, 5), st.integers(2, 4))
def test_weak_norm_below_strong_norm(seed, u, p, k, n):
    rows = np.random.default_rng(seed).standard_normal((k, n))
    s = seq(rows, u, p)
    assert weak_p_norm(s, np.random.default_rng(seed)).upper <= strong_p_norm(s) * (1 + 1e-9)


@given(st.integers(0, 10_000), exponents, st.sampled_from([1.0, 2.0, 4.0]))
def test_weak_norm_monotone_under_appending(seed, u, p):
    rows = np.random.default_rng(seed).standard_normal((4, 3))
    short = weak_p_norm(seq(rows[:3], u, p), np.random.default_rng(0)).lower
    full = weak_p_norm(seq(rows, u, p), np.random.default_rng(0))
    assert full.upper >= short * (1 - 1e-9)


@given(st.integers(0, 10_000), st.sampled_from([1.0, INF]), st.sampled_from([1.0, 2.0, 3.0]))
def test_weak_norm_exact_on_polytopes(seed, u, p):
    rows = np.random.default_rng(seed).standard_normal((3, 3))
    est = weak_p_norm(seq(rows, u, p), np.random.default_rng(0))
    assert est.lower == est.upper


# -- p-convex hulls ------------------------------------------------------------


def test_membership_examples():
    s = seq(np.eye(2), 2, 2)
    m = pco_membership(s, Vector([2**-0.5, 2**-0.5], s.space))
    assert m.member
    np.testing.assert_allclose(m.coefficients, [2**-0.5, 2**-0.5], atol=1e-6)
    m = pco_membership(s, Vector([1.0, 1.0], s.space))
    assert not m.member
    assert m.coefficient_norm == pytest.approx(math.sqrt(2), rel=1e-6)
    s1 = seq([[2.0, 0.0]], 2, 1)
    m = pco_membership(s1, Vector([1.0, 0.0], s1.space))
    assert m.member
    np.testing.assert_allclose(m.coefficients, [0.5], atol=1e-7)


def test_membership_outside_span_gives_certificate():
    s = seq([[1.0, 0.0]], 2, 2)
    m = pco_membership(s, Vector([0.0, 1.0], s.space))
    assert not m.member
    c = m.infeasibility_certificate
    assert abs(c @ s.items[0]) < 1e-9 and abs(c @ np.array([0.0, 1.0])) > 1e-6


@given(st.integers(0, 10_000), exponents, st.sampled_from([1.0, 1.5, 2.0, 4.0]))
def test_hull_members_respect_the_sequence_norm(seed, u, p):
    rng = np.random.default_rng(seed)
    s = seq(rng.standard_normal((4, 3)), u, p)
    alpha = rng.standard_normal(4)
    q = dual_exponent(p)
    from opideal.spaces import lp_norm
    alpha /= lp_norm(alpha, q) * 1.01
    point = Vector(alpha @ s.items, s.space)
    m = pco_membership(s, point)
    assert m.member
    assert vector_norm(point) <= strong_p_norm(s) + 1e-7
