from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fconvex.one_dim import (
    Density1D, NonSmoothError, OneDimMeasure, TailIntegrabilityError, ab_from_cd, arc_length, cd_from_ab,
    convexity_1d, curve_from_support, pairing_residual, radius_1d, solve_1d, solve_1d_smooth,
)
from fconvex.polyhedral import build_d1, h1_point

T = np.linspace(-3, 3, 61)
R, A = np.meshgrid(np.linspace(-3, 3, 61), np.linspace(0, 3, 31))
DIRAC = OneDimMeasure(((0.0, 1.0),))


def zero_mean_profile(t):
    t = np.asarray(t, dtype=float)
    return np.sinh(t) * np.arctan(1 / np.sinh(t)) - 1


def compact_density():
    return Density1D(lambda s: np.where(np.abs(s - 0.3) < 1, (1 - (s - 0.3) ** 2) ** 2, 0.0), support=(-0.7, 1.3))


def test_dirac_solution():
    assert np.abs(solve_1d(DIRAC)(T) + np.exp(-np.abs(T)) / 2).max() < 1e-15


@pytest.mark.parametrize("c, r", [(0.0, 1.0), (0.4, 2.0), (-0.7, 1.5), (2.0, 0.5)])
def test_dirac_pairing(c, r):
    assert abs(pairing_residual(solve_1d(DIRAC), DIRAC, c, r)) < 1e-8


def test_segment_solution():
    h = solve_1d(DIRAC, A=0.5)
    assert np.abs(h(T) - np.abs(np.sinh(T)) / 2).max() < 1e-15


def test_zero_measure_is_homogeneous():
    h = solve_1d(OneDimMeasure(), A=0.3, B=-1.2)
    assert np.allclose(h(T), 0.3 * np.cosh(T) - 1.2 * np.sinh(T))


def test_mixed_measure_pairing():
    mu = OneDimMeasure(((-0.5, 0.7), (1.1, 2.0)), compact_density())
    h = solve_1d(mu, A=0.2, B=0.1)
    for c, r in ((0.0, 1.0), (1.0, 0.6), (-0.4, 2.5)):
        assert abs(pairing_residual(h, mu, c, r)) < 1e-8


def test_density_tail_checks():
    with pytest.raises(TailIntegrabilityError):
        Density1D(lambda s: np.exp(s))
    with pytest.raises(TailIntegrabilityError):
        Density1D(lambda s: np.exp(np.abs(s)), growth=(1.0, 1.0))
    d = Density1D(lambda s: np.exp(0.5 * np.abs(s)), growth=(1.0, 0.5), breakpoints=(0.0,))
    mu = OneDimMeasure(((0.5, 1.0),), d)
    h = solve_1d(mu)
    for c, r in ((0.0, 1.0), (3.0, 2.0), (-5.0, 1.0)):
        assert abs(pairing_residual(h, mu, c, r)) < 1e-8


def test_atom_weights_positive():
    with pytest.raises(ValueError):
        OneDimMeasure(((0.0, -1.0),))


def test_smooth_constant_density_residual():
    h = solve_1d_smooth(lambda s: 1.0)
    t = np.linspace(-1.5, 2.5, 9)
    assert np.abs(radius_1d(lambda x: h(x), t) - 1.0).max() < 1e-6
    assert np.abs(h(t) - (np.cosh(t - 1) - 1)).max() < 1e-12


def test_smooth_zero_density():
    h = solve_1d_smooth(lambda s: 0.0, C=0.4, D=0.1)
    assert np.allclose(h(T), 0.4 * np.cosh(T) + 0.1 * np.sinh(T))


def test_forms_agree_under_conversion():
    dens = compact_density()
    C, D = 0.3, -0.2
    A_, B_ = ab_from_cd(dens, C, D)
    green = solve_1d(OneDimMeasure((), dens), A_, B_)
    base = solve_1d_smooth(dens, C, D)
    t = np.linspace(-2, 3, 11)
    assert np.abs(green(t) - base(t)).max() < 1e-9
    assert np.allclose(cd_from_ab(dens, A_, B_), (C, D), atol=1e-14)


def test_convexity_examples():
    assert convexity_1d(lambda t: np.abs(np.sinh(t)) / 2, R, A).ok
    assert convexity_1d(lambda t: -np.exp(-np.abs(t)) / 2, R, A).ok
    bad = convexity_1d(lambda t: np.exp(-np.abs(t)) / 2, R, A)
    assert bad.verdict == "violated"
    assert any(w["rho"] == 0.0 for w in bad.witnesses)


def test_build_d1_support_is_convex():
    P = build_d1([-1.0, 0.2, 1.5], [0.5, 1.0, 2.0])
    s = P.spec
    assert convexity_1d(lambda t: s.h(h1_point(t)), R, A).ok


def test_curve_of_unit_ball():
    rho = np.linspace(-2, 2, 9)
    c = curve_from_support(lambda t: -np.ones_like(np.asarray(t, dtype=float)), rho)
    assert np.allclose(c.points, np.stack([np.sinh(rho), np.cosh(rho)], axis=1), atol=1e-9)
    assert not c.kinks


def test_curve_tangent_direction():
    h = solve_1d(OneDimMeasure((), compact_density()), A=1.0)
    rho = np.linspace(-1.5, 2.0, 8)
    s = 1e-5
    cp = curve_from_support(h, rho + s).points
    cm = curve_from_support(h, rho - s).points
    tangent = (cp - cm) / (2 * s)
    expected = h.radius(rho)[:, None] * np.stack([np.cosh(rho), np.sinh(rho)], axis=1)
    assert np.abs(tangent - expected).max() < 1e-5


def test_curve_kink_segments():
    h = solve_1d(OneDimMeasure(((0.0, 1.5),)), A=1.0)
    c = curve_from_support(h, np.linspace(-1, 1, 5))
    assert c.kinks == [0.0]
    (p, q), = c.segments()
    # the jump across the kink is the edge of length equal to the atom weight
    e = q - p
    assert np.sqrt(e[0] ** 2 - e[1] ** 2) == pytest.approx(1.5, abs=1e-12)


def test_kink_detected_by_differences():
    c = curve_from_support(lambda t: np.abs(np.sinh(t)) / 2, np.linspace(-1, 1, 5))
    assert c.kinks == [0.0]


def test_radius_examples():
    t = np.linspace(0.2, 3.0, 15)
    assert np.allclose(radius_1d(lambda x: -np.ones_like(x), t), 1.0)
    assert np.abs(radius_1d(lambda x: 0.7 * np.cosh(x) - 0.2 * np.sinh(x), t)).max() < 1e-8
    assert np.abs(radius_1d(zero_mean_profile, t) + 1 / np.cosh(t) ** 2).max() < 1e-8


def test_radius_rejects_kink():
    with pytest.raises(NonSmoothError):
        radius_1d(solve_1d(DIRAC), 0.0)
    with pytest.raises(NonSmoothError):
        radius_1d(lambda x: np.abs(np.sinh(x)), np.array([0.0]))


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_homogeneous_part_leaves_radius(a, b):
    t = np.linspace(0.3, 2.0, 5)
    base = radius_1d(zero_mean_profile, t)
    shifted = radius_1d(lambda x: zero_mean_profile(x) + a * np.cosh(x) + b * np.sinh(x), t)
    assert np.abs(shifted - base).max() < 1e-6


def test_arc_length_matches_radius_integral():
    dens = compact_density()
    h = solve_1d(OneDimMeasure((), dens), A=1.0)
    from scipy.integrate import quad
    expected = quad(lambda s: float(h.radius(s)), -0.5, 1.0)[0]
    assert arc_length(h, -0.5, 1.0) == pytest.approx(expected, abs=1e-6)
