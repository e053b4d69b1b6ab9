from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fconvex.fields import OutOfDomainError
from fconvex.lorentz import (direction_from_angles, lorentz_norm, minkowski_form, origin, polar_to,
                             random_hpoints)
from fconvex.support.geometry import (
    check_convexity_pointwise, check_radial_convexity, check_subadditivity, curvature, eval_h, extend_H,
    fd_reverse_II, minkowski_sum, normal_representation, scale, support_at_infinity,
)
from fconvex.support.spec import (
    ClosedForm, ConeApex, Constant, NonDifferentiableError, PolyhedralMax, PowerCosh, Scale, Sum, Tabulated,
    ball, from_json, zero_mean_radius_profile,
)
from fconvex.fields import SolutionField

E3 = origin(2)
RNG_PTS = random_hpoints(np.random.default_rng(7), 200, 2, radius=2.0)


def smooth_catalog():
    p = np.array([0.3, -0.2, 1.4])
    return [Constant(-1.5), ConeApex(p), PowerCosh(0.5, -1, E3), PowerCosh(2.0, 1, hpt(0.3, 0.1)),
            PowerCosh(1.5, 1, E3) + Constant(-0.5), Scale(2.0, PowerCosh(0.7, -1, hpt(-0.2, 0.4))),
            zero_mean_radius_profile([0.0, 1.0, 0.0])]


def hpt(a, b):
    return np.array([a, b, np.sqrt(1 + a * a + b * b)])


def test_eval_constant_is_ball():
    assert np.all(eval_h(Constant(-2.0), RNG_PTS) == -2.0)


def test_eval_cone_apex():
    assert np.allclose(eval_h(ConeApex(E3), RNG_PTS), -RNG_PTS[:, 2], atol=1e-14)


def test_power_cosh_one_is_cone():
    assert np.allclose(eval_h(PowerCosh(1.0, -1, E3), RNG_PTS), eval_h(ConeApex(E3), RNG_PTS), atol=1e-12)


def test_polyhedral_max_value():
    P = PolyhedralMax(np.array([[0.0, 0, 0], [1.0, 0, 0]]))
    assert np.allclose(eval_h(P, RNG_PTS), np.maximum(0.0, RNG_PTS[:, 0]))


def test_extend_H_examples():
    x = RNG_PTS * np.linspace(0.5, 3.0, len(RNG_PTS))[:, None]
    assert np.allclose(extend_H(Constant(-0.7), x), -0.7 * lorentz_norm(x))
    p = np.array([0.5, 0.2, -0.3])
    assert np.allclose(extend_H(ConeApex(p), x), minkowski_form(p, x))


def test_extend_H_rejects_non_future():
    with pytest.raises(ValueError):
        extend_H(Constant(-1.0), np.array([1.0, 0, 0]))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 100.0), st.integers(0, 6))
def test_homogeneity(lam, k):
    s = smooth_catalog()[k]
    x = RNG_PTS[:20]
    assert np.allclose(s.H(lam * x), lam * s.H(x), rtol=1e-10, atol=1e-10)


def test_chi_examples():
    p = np.array([0.3, -0.2, 1.4])
    assert np.allclose(normal_representation(ConeApex(p), RNG_PTS), p)
    assert np.allclose(normal_representation(Constant(-1.0), RNG_PTS), RNG_PTS)


@pytest.mark.parametrize("k", range(7))
def test_euler_identity(k):
    s = smooth_catalog()[k]
    pts = RNG_PTS[s.contains(RNG_PTS)]
    chi = normal_representation(s, pts)
    assert np.abs(minkowski_form(chi, pts) - s.h(pts)).max() < 1e-8


@pytest.mark.parametrize("k", range(7))
def test_fd_matches_analytic_hessian(k):
    s = smooth_catalog()[k]
    pts = RNG_PTS[:40]
    pts = pts[s.contains(pts)]
    a, b = s.reverse_II(pts), fd_reverse_II(s, pts)
    assert np.abs(a - b).max() < 1e-5 * max(1.0, np.abs(a).max())


def test_radii_examples():
    assert np.allclose(curvature(Constant(-0.8), RNG_PTS).radii, 0.8)
    assert np.allclose(curvature(ConeApex(np.array([1.0, 2.0, 3.0])), RNG_PTS).radii, 0.0)


@pytest.mark.parametrize("alpha", [1.5, 2.0, 3.0])
def test_power_cosh_radii(alpha):
    rho = np.linspace(0.1, 2.0, 9)
    pts = polar_to(E3, rho, direction_from_angles(np.full_like(rho, 0.4), 2))
    radii = curvature(PowerCosh(alpha, 1, E3), pts).radii
    c, s = np.cosh(rho), np.sinh(rho)
    sphere = (alpha - 1) * c ** alpha
    radial = sphere + alpha * (alpha - 1) * c ** (alpha - 2) * s ** 2
    assert np.allclose(np.sort(radii, axis=1), np.stack([sphere, radial], axis=1), rtol=1e-10)


def test_radii_shift_under_ball_sum():
    s = PowerCosh(2.0, 1, hpt(0.3, 0.1))
    eps = 0.37
    a = curvature(s, RNG_PTS).radii
    b = curvature(minkowski_sum(s, ball(eps)), RNG_PTS).radii
    assert np.allclose(b, a + eps, atol=1e-10)


def test_polyhedral_tie_raises():
    P = PolyhedralMax(np.array([[0.0, 0, 0], [1.0, 0, 0]]))
    eta = hpt(0.0, 0.5)
    with pytest.raises(NonDifferentiableError) as err:
        normal_representation(P, eta)
    assert sorted(err.value.tie_sets[0]) == [0, 1]


def test_convexity_pointwise_examples():
    rep = check_convexity_pointwise(Constant(-1.0), RNG_PTS)
    assert rep.ok and rep.min_eigenvalue == pytest.approx(1.0)
    assert check_convexity_pointwise(PowerCosh(0.5, -1, E3), RNG_PTS).ok
    bad = check_convexity_pointwise(PowerCosh(0.5, 1, E3), RNG_PTS)
    assert bad.verdict == "violated" and bad.witnesses and bad.witnesses[0]["value"] < -1e-8


def test_radial_convexity_examples():
    rng = np.random.default_rng(1)
    samples = np.stack([rng.uniform(-2, 2, 200), rng.uniform(0.01, 2, 200)], axis=1)
    rep = check_radial_convexity(Constant(-1.0), E3, [1.0, 0.0], samples)
    assert rep.ok and rep.min_eigenvalue > 0
    cone = check_radial_convexity(ConeApex(E3), hpt(0.2, -0.4), [0.6, 0.8], samples)
    assert cone.ok and abs(cone.min_eigenvalue) < 1e-9


def test_radial_convexity_catches_concave():
    # h = +cosh^0.5 is not convex; some radial triple must fail
    rng = np.random.default_rng(2)
    samples = np.stack([rng.uniform(-2, 2, 400), rng.uniform(0.01, 1.5, 400)], axis=1)
    assert not check_radial_convexity(PowerCosh(0.5, 1, E3), E3, [1.0, 0.0], samples).ok


def test_subadditivity_certified_specs():
    rng = np.random.default_rng(3)
    x = random_hpoints(rng, 10 ** 4, 2, radius=2.5) * rng.uniform(0.1, 5, (10 ** 4, 1))
    y = random_hpoints(rng, 10 ** 4, 2, radius=2.5) * rng.uniform(0.1, 5, (10 ** 4, 1))
    for s in (Constant(-1.0), ConeApex(np.array([0.3, -0.2, 1.4])), PowerCosh(0.5, -1, E3),
              PowerCosh(2.0, 1, hpt(0.3, 0.1))):
        assert check_convexity_pointwise(s, RNG_PTS).ok
        assert check_subadditivity(s, x, y).ok
    assert not check_subadditivity(Constant(1.0), x[:100], y[:100]).ok


def test_sum_and_scale():
    p, q = np.array([0.1, 0.2, 0.5]), np.array([-0.4, 0.0, 1.0])
    s = minkowski_sum(ConeApex(p), ConeApex(q))
    assert np.allclose(s.h(RNG_PTS), ConeApex(p + q).h(RNG_PTS), atol=1e-14)
    assert np.array_equal(scale(2.0, Constant(-1.0)).h(RNG_PTS), Constant(-2.0).h(RNG_PTS))
    k = PowerCosh(2.0, 1, E3)
    assert np.allclose(minkowski_sum(k, ball(0.25)).h(RNG_PTS), k.h(RNG_PTS) - 0.25, atol=1e-14)
    with pytest.raises(ValueError):
        scale(0.0, k)


def test_sum_is_exact():
    a, b = PowerCosh(2.0, 1, E3), ConeApex(np.array([0.2, 0.1, 0.7]))
    assert np.array_equal(minkowski_sum(a, b).h(RNG_PTS), a.h(RNG_PTS) + b.h(RNG_PTS))


def test_support_at_infinity():
    assert support_at_infinity(Constant(-2.0), [1.0, 0.0]) == pytest.approx(0.0, abs=1e-7)
    p = np.array([0.3, -0.2, 1.4])
    theta = np.array([0.6, 0.8])
    ell = np.append(theta, 1.0)
    assert support_at_infinity(ConeApex(p), theta) == pytest.approx(minkowski_form(p, ell), abs=1e-8)
    assert support_at_infinity(PowerCosh(1.5, 1, E3), theta) == np.inf


def test_json_round_trip():
    for s in smooth_catalog():
        back = from_json(s.to_json())
        pts = RNG_PTS[s.contains(RNG_PTS)]
        assert np.array_equal(back.h(pts), s.h(pts))


def test_tabulated_outside_grid():
    field = SolutionField.tabulate(lambda p: Constant(-1.0).h(p), E3, np.linspace(0, 1, 5),
                                   np.arange(8) * np.pi / 4)
    tab = Tabulated(field)
    assert tab.h(polar_to(E3, 0.5, 0.3)) == pytest.approx(-1.0)
    with pytest.raises(OutOfDomainError):
        tab.h(polar_to(E3, 2.0, 0.3))


def test_closed_form_rejects_unknown_name():
    with pytest.raises(ValueError):
        ClosedForm("nope")


def test_zero_mean_radius_surface_has_zero_trace():
    pts = RNG_PTS[np.abs(RNG_PTS[:, 0]) > 0.05]
    tr = np.trace(curvature(zero_mean_radius_profile([1.0, 0.0, 0.0]), pts).reverse_II, axis1=-2, axis2=-1)
    assert np.abs(tr).max() < 1e-8


def test_zero_mean_profile_normal_representation():
    t, th = np.meshgrid(np.linspace(0.1, 3.0, 15), np.linspace(-1.5, 1.5, 15))
    t, th = t.ravel(), th.ravel()
    eta = np.stack([np.sinh(t) * np.cos(th), np.sinh(t) * np.sin(th), np.cosh(t)], axis=-1)
    q = 1 + (np.sinh(t) * np.cos(th)) ** 2
    expected = np.stack([np.arctan(1 / (np.sinh(t) * np.cos(th))), np.sinh(t) * np.sin(th) / q, np.cosh(t) / q], -1)
    chi = zero_mean_radius_profile([1.0, 0.0, 0.0]).chi(eta)
    assert np.abs(chi - expected).max() < 1e-8
