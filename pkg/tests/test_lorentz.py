from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fconvex.lorentz import (
    CausalClass, CocycleD1, LorentzIsometry, boost_d1, boost_parameter_d1, check_dim, classify,
    coboundary, coboundary_solve_d1, cocycle_check, exp_map, hyperbolic_distance, identity, log_map,
    minkowski_form, normalize_future, origin, polar_from, polar_to, random_hpoints, random_isometry,
    tangent_frame,
)

S1, C1 = np.sinh(1.0), np.cosh(1.0)
finite = st.floats(-3, 3, allow_nan=False)


def test_form_on_basis_vectors():
    e3 = origin(2)
    assert minkowski_form(e3, e3) == -1.0
    assert minkowski_form([1.0, 0, 0], [1.0, 0, 0]) == 1.0


def test_form_worked_value():
    assert minkowski_form([S1, 0, C1], [0, 0, 1]) == pytest.approx(-1.5430806348152437, abs=1e-15)


def test_form_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        minkowski_form([1.0, 0, 0], [1.0, 0])


def test_check_dim_range():
    assert check_dim(3) == 3
    with pytest.raises(ValueError):
        check_dim(4)


@pytest.mark.parametrize("x, cls", [
    ([0, 0, 1], CausalClass.FUTURE_TIMELIKE),
    ([0, 0, -1], CausalClass.PAST_TIMELIKE),
    ([1, 0, 1], CausalClass.FUTURE_LIGHTLIKE),
    ([1, 0, -1], CausalClass.PAST_LIGHTLIKE),
    ([1, 0, 0], CausalClass.SPACELIKE),
    ([0, 0, 0], CausalClass.ZERO),
])
def test_classify(x, cls):
    assert classify(np.array(x, dtype=float)) is cls


def test_distance_examples():
    e3 = origin(2)
    assert hyperbolic_distance(e3, e3) == 0.0
    assert hyperbolic_distance(e3, [S1, 0, C1]) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_distance_symmetric(seed):
    x, y = random_hpoints(np.random.default_rng(seed), 2, 2, radius=3.0)
    assert hyperbolic_distance(x, y) == pytest.approx(hyperbolic_distance(y, x), abs=1e-12)


def test_normalize_future():
    p, n = normalize_future(2 * origin(2))
    assert n == pytest.approx(2.0) and np.allclose(p, origin(2))
    x = np.array([S1, 0, C1])
    p, n = normalize_future(3 * x)
    assert n == pytest.approx(3.0) and np.allclose(p, x, atol=1e-14)
    p2, n2 = normalize_future(p)
    assert n2 == pytest.approx(1.0) and np.allclose(p2, p, atol=1e-15)


def test_normalize_future_rejects_spacelike():
    with pytest.raises(ValueError):
        normalize_future([1.0, 0, 0])


def test_polar_to_worked_value():
    assert np.allclose(polar_to(origin(2), 1.0, 0.0), [S1, 0, C1], atol=1e-15)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_polar_round_trip(d):
    rng = np.random.default_rng(d)
    base = random_hpoints(rng, 1, d, radius=1.0)[0]
    pts = random_hpoints(rng, 1000, d, radius=4.0, center=base)
    worst = 0.0
    for p in pts:
        pc = polar_from(base, p)
        back = polar_to(base, pc.rho, pc.direction)
        worst = max(worst, np.abs(back - p).max() / max(1.0, np.abs(p).max()))
        tangent = pc.direction @ tangent_frame(base).T
        assert abs(minkowski_form(tangent, base)) < 1e-10
    assert worst < 1e-10


def test_polar_degenerate_flag():
    pc = polar_from(origin(2), origin(2))
    assert pc.degenerate and pc.rho == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_exp_log_inverse(seed):
    rng = np.random.default_rng(seed)
    p, x = random_hpoints(rng, 2, 3, radius=3.0)
    assert np.allclose(exp_map(p, log_map(p, x)), x, atol=1e-9 * np.abs(x).max())


def test_boost_d1_examples():
    assert np.allclose(boost_d1(0.0).linear, np.eye(2))
    assert np.allclose(boost_d1(1.0)(np.array([0.0, 1.0])), [S1, C1], atol=1e-15)


@given(finite, finite)
def test_boost_group_law(a, b):
    assert np.allclose((boost_d1(a) @ boost_d1(b)).linear, boost_d1(a + b).linear, rtol=1e-12, atol=1e-12)
    assert boost_parameter_d1(boost_d1(a)) == pytest.approx(a, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_random_isometry_preserves_form(seed):
    rng = np.random.default_rng(seed)
    g = random_isometry(rng, 2)
    x, y = rng.normal(size=(2, 3))
    assert minkowski_form(g.linear @ x, g.linear @ y) == pytest.approx(minkowski_form(x, y), abs=1e-9)
    assert np.allclose((g @ g.inverse()).linear, np.eye(3), atol=1e-9)


def test_coboundary_zero():
    c = CocycleD1(boost_d1(1.0), np.zeros(2))
    assert np.all(coboundary_solve_d1(c) == 0.0)


def test_coboundary_worked_value():
    # (Id - boost(1)) v = (1, 0), solved symbolically: v = (1/2, sinh 1 / (2 (1 - cosh 1)))
    v = coboundary_solve_d1(CocycleD1(boost_d1(1.0), np.array([1.0, 0.0])))
    assert np.allclose(v, [0.5, -1.0819767068693264], atol=1e-12)


@settings(max_examples=30)
@given(finite, finite, st.floats(0.1, 3))
def test_coboundary_recovers_v(v1, v2, t):
    g = boost_d1(t)
    v = np.array([v1, v2])
    got = coboundary_solve_d1(CocycleD1(g, coboundary(v, g)))
    assert np.allclose(got, v, atol=1e-8 * max(1.0, 1 / t ** 2))


def test_coboundary_rejects_identity():
    with pytest.raises(ValueError):
        CocycleD1(boost_d1(0.0), np.ones(2))


def test_cocycle_single_generator():
    g = LorentzIsometry(boost_d1(0.7).linear, np.array([0.3, -1.2]))
    rep = cocycle_check([g], [(1,), (1, 1), (1, -1, 1), (-1, -1, 1)])
    assert rep.ok


def test_cocycle_translation_group():
    gens = [LorentzIsometry(np.eye(3), np.array([1.0, 0, 0])), LorentzIsometry(np.eye(3), np.array([0, 2.0, 0.5]))]
    words = [(1, 2), (2, 1, -2), (1, 1, -2, 2)]
    assert cocycle_check(gens, words).ok

    def not_additive(word):
        return np.array([len(word) ** 2, 0.0, 0.0])

    rep = cocycle_check(gens, words, tau=not_additive)
    assert not rep.ok and rep.failing_word is not None


def test_identity_isometry():
    x = np.array([0.2, 0.3, 2.0])
    assert np.array_equal(identity(2)(x), x)
