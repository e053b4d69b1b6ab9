"""The planar case: h'' - h = mu on the real line.

Solutions, the three-point convexity test, reconstruction of the boundary
curve from h, and its radius of curvature h'' - h.

Sign convention: a unit atom at t0 gives the particular solution
-exp(-|t - t0|)/2; pairing with bumps (``pairing_residual``) confirms that this
sign solves h'' - h = delta in the distributional sense.  It differs from the
convex segment solution |sinh(t - t0)|/2 by the homogeneous term cosh(t - t0)/2.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .measures import PROFILES
from .support.geometry import CERTIFIED, INEQUALITY_TOL, VIOLATED, ConvexityReport

_QUAD = dict(epsabs=1e-14, epsrel=1e-12, limit=400)


class TailIntegrabilityError(ValueError):
    """The density does not satisfy int exp(-|t|) |phi| dt < infinity by its declared bound."""


class NonSmoothError(ValueError):
    """h is not twice differentiable at the requested point."""


@dataclass(frozen=True)
class Density1D:
    """A continuous density phi with either a compact support or a growth bound.

    ``support=(lo, hi)`` means phi vanishes outside [lo, hi];
    ``growth=(M, c)`` means |phi(t)| <= M exp(c |t|), which is integrable
    against exp(-|t|) only for c < 1.  ``breakpoints`` lists points where phi
    is not smooth; quadrature splits there.
    """

    func: Callable
    support: tuple | None = None
    growth: tuple | None = None
    breakpoints: tuple = ()

    def __post_init__(self):
        if self.support is None and self.growth is None:
            raise TailIntegrabilityError("density needs a compact support or a growth bound (M, c)")
        if self.support is not None:
            lo, hi = map(float, self.support)
            if not lo < hi:
                raise ValueError("density support must be an interval lo < hi")
            object.__setattr__(self, "support", (lo, hi))
        elif not float(self.growth[1]) < 1.0:
            raise TailIntegrabilityError(
                f"growth exponent c = {self.growth[1]} >= 1: exp(-|t|) phi is not integrable")

    def __call__(self, t):
        return self.func(t)

    def limits(self, center: float = 0.0):
        """Integration range for phi(s) exp(-|s - center|).

        Under a growth bound the range is cut where the weighted tail
        M exp(c|center|) exp((c - 1)|s - center|) drops below 1e-17, so that
        quadrature never evaluates phi where it overflows.
        """
        if self.support is not None:
            return self.support
        M, c = map(float, self.growth)
        L = (np.log(max(M, 1e-300) / 1e-17) + c * abs(center)) / (1.0 - c)
        return center - max(L, 1.0), center + max(L, 1.0)


@dataclass(frozen=True)
class OneDimMeasure:
    """Atoms (t_i, w_i) with w_i > 0, sorted by t, plus an optional density."""

    atoms: tuple = ()
    density: Density1D | None = None

    def __post_init__(self):
        atoms = tuple(sorted((float(t), float(w)) for t, w in self.atoms))
        for _, w in atoms:
            if not w > 0:
                raise ValueError("atom weights must be positive")
        object.__setattr__(self, "atoms", atoms)

    @property
    def atom_positions(self) -> np.ndarray:
        return np.array([t for t, _ in self.atoms])

    def integrate(self, f, window=None) -> float:
        """int f dmu; ``window`` = (lo, hi) restricts the density part to the support of f."""
        total = sum(w * float(f(t)) for t, w in self.atoms)
        if self.density is not None:
            lo, hi = self.density.limits()
            if window is not None:
                lo, hi = max(lo, window[0]), min(hi, window[1])
            if hi > lo:
                total += _quad_split(lambda s: f(s) * self.density(s), lo, hi, self.density.breakpoints)
        return total


def _quad_split(fun, lo, hi, points) -> float:
    """quad over [lo, hi] split at the given interior points (limits may be infinite)."""
    cuts = [lo] + sorted(p for p in points if lo < p < hi) + [hi]
    return float(sum(quad(fun, a, b, **_QUAD)[0] for a, b in zip(cuts[:-1], cuts[1:]) if b > a))


@dataclass
class Solution1D:
    """h = particular + A cosh t + B sinh t.

    ``form`` is "green" for the convolution with -exp(-|t - s|)/2 and
    "base-point" for int_1^t sinh(t - s) phi(s) ds.
    """

    particular: Callable
    A: float = 0.0
    B: float = 0.0
    particular_derivative: Callable | None = None
    phi: Callable | None = None
    form: str = "green"
    kinks: tuple = ()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.particular(t) + self.A * np.cosh(t) + self.B * np.sinh(t)

    def derivative(self, t, side: int = 0):
        """h'(t); ``side`` = -1 / +1 picks the one-sided limit at a kink."""
        if self.particular_derivative is None:
            raise NotImplementedError("no derivative available for this solution")
        t = np.asarray(t, dtype=float)
        return self.particular_derivative(t, side) + self.A * np.sinh(t) + self.B * np.cosh(t)

    def radius(self, t):
        """h'' - h, exact: the density of the measure (atoms are non-smooth points)."""
        t = np.asarray(t, dtype=float)
        for t0 in self.kinks:
            if np.any(t == t0):
                raise NonSmoothError(f"radius_1d: h has a kink at t = {t0}")
        return np.zeros_like(t) if self.phi is None else np.vectorize(lambda s: float(self.phi(s)))(t)


def solve_1d(mu: OneDimMeasure, A: float = 0.0, B: float = 0.0) -> Solution1D:
    """h(t) = -sum w_i exp(-|t - t_i|)/2 - int exp(-|t - s|)/2 phi(s) ds + A cosh t + B sinh t."""
    pos = mu.atom_positions
    wts = np.array([w for _, w in mu.atoms])
    dens = mu.density

    def dens_part(t, deriv):
        lo, hi = dens.limits(t)
        # splitting a few decay lengths away from t helps quad on long ranges
        cuts = list(dens.breakpoints) + [t - 1.0, t - 8.0, t + 1.0, t + 8.0]
        # derivative of -exp(-|t-s|)/2 in t is sign(t - s) exp(-|t-s|)/2
        if deriv:
            left = _quad_split(lambda s: np.exp(s - t) / 2 * dens(s), lo, min(t, hi), cuts)
            right = _quad_split(lambda s: -np.exp(t - s) / 2 * dens(s), max(t, lo), hi, cuts)
        else:
            left = _quad_split(lambda s: -np.exp(s - t) / 2 * dens(s), lo, min(t, hi), cuts)
            right = _quad_split(lambda s: -np.exp(t - s) / 2 * dens(s), max(t, lo), hi, cuts)
        return left + right

    def particular(t):
        t = np.asarray(t, dtype=float)
        out = -(wts * np.exp(-np.abs(t[..., None] - pos))).sum(axis=-1) / 2 if pos.size else np.zeros_like(t)
        if dens is not None:
            out = out + np.vectorize(lambda s: dens_part(s, False))(t)
        return out

    def particular_derivative(t, side=0):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        if pos.size:
            diff = t[..., None] - pos
            sgn = np.sign(diff)
            if side:
                sgn = np.where(diff == 0, float(side), sgn)
            out = (wts * sgn * np.exp(-np.abs(diff))).sum(axis=-1) / 2
        if dens is not None:
            out = out + np.vectorize(lambda s: dens_part(s, True))(t)
        return out

    return Solution1D(particular, float(A), float(B), particular_derivative, dens, "green", tuple(pos.tolist()))


def solve_1d_smooth(phi: Callable, C: float = 0.0, D: float = 0.0) -> Solution1D:
    """h(t) = int_1^t sinh(t - s) phi(s) ds + C cosh t + D sinh t, for any continuous phi."""

    def particular(t):
        return np.vectorize(lambda x: quad(lambda s: np.sinh(x - s) * phi(s), 1.0, x, **_QUAD)[0])(
            np.asarray(t, dtype=float))

    def particular_derivative(t, side=0):
        return np.vectorize(lambda x: quad(lambda s: np.cosh(x - s) * phi(s), 1.0, x, **_QUAD)[0])(
            np.asarray(t, dtype=float))

    return Solution1D(particular, float(C), float(D), particular_derivative, phi, "base-point")


def _base_point_moments(density: Density1D) -> tuple:
    """P = int_1^inf exp(-s) phi, Q = int_-inf^1 exp(s) phi."""
    lo, hi = density.limits(1.0)
    cuts = density.breakpoints
    P = _quad_split(lambda s: np.exp(-s) * density(s), max(lo, 1.0), hi, cuts) if hi > 1.0 else 0.0
    Q = _quad_split(lambda s: np.exp(s) * density(s), lo, min(hi, 1.0), cuts) if lo < 1.0 else 0.0
    return P, Q


def ab_from_cd(density: Density1D, C: float, D: float) -> tuple:
    """Homogeneous coefficients of the green form equal to the base-point form with (C, D)."""
    P, Q = _base_point_moments(density)
    return C + (P + Q) / 2, D + (P - Q) / 2


def cd_from_ab(density: Density1D, A: float, B: float) -> tuple:
    P, Q = _base_point_moments(density)
    return A - (P + Q) / 2, B - (P - Q) / 2


def convexity_1d(h: Callable, rho, alpha, tol: float = INEQUALITY_TOL) -> ConvexityReport:
    """Check h(rho + alpha) + h(rho - alpha) >= 2 cosh(alpha) h(rho) - tol at all sample pairs."""
    rho, alpha = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(alpha, dtype=float))
    slack = h(rho + alpha) + h(rho - alpha) - 2 * np.cosh(alpha) * h(rho)
    bad = slack < -tol
    witnesses = [{"rho": float(r), "alpha": float(a), "value": float(s)}
                 for r, a, s in zip(rho[bad][:20], alpha[bad][:20], slack[bad][:20])]
    return ConvexityReport(VIOLATED if witnesses else CERTIFIED, witnesses, float(np.min(slack)), int(rho.size))


def boost_point(t):
    """(sinh t, cosh t)."""
    return np.stack([np.sinh(t), np.cosh(t)], axis=-1)


def boost_normal(t):
    """(cosh t, sinh t): the unit spacelike tangent at (sinh t, cosh t)."""
    return np.stack([np.cosh(t), np.sinh(t)], axis=-1)


def curve_point(h_val, dh_val, rho):
    """c(rho) = h'(rho)(cosh, sinh) - h(rho)(sinh, cosh)."""
    rho = np.asarray(rho, dtype=float)
    return np.asarray(dh_val)[..., None] * boost_normal(rho) - np.asarray(h_val)[..., None] * boost_point(rho)


@dataclass
class Curve1D:
    """Sampled boundary curve; ``marker`` is 0 for regular points, -1 / +1 for the two one-sided limits at a kink."""

    rho: np.ndarray
    points: np.ndarray
    marker: np.ndarray
    kinks: list = field(default_factory=list)

    def segments(self):
        """Polygon edges joining the one-sided limits at each kink."""
        out = []
        for i in np.flatnonzero(self.marker == -1):
            if i + 1 < self.marker.size and self.marker[i + 1] == 1:
                out.append((self.points[i], self.points[i + 1]))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rho", "x1", "x2", "kink"])
        for r, (x1, x2), m in zip(self.rho, self.points, self.marker):
            w.writerow([f"{r:.17g}", f"{x1:.17g}", f"{x2:.17g}", int(m)])
        return buf.getvalue()


def _one_sided(h, r, step, side):
    # second-order one-sided difference
    return side * (-3 * h(r) + 4 * h(r + side * step) - h(r + 2 * side * step)) / (2 * step)


def curve_from_support(h: Callable, rho, step: float = 1e-6, kink_tol: float = 1e-5, kinks=()) -> Curve1D:
    """Sample c(rho) over a grid.

    h' comes from ``h.derivative`` when available, else from central
    differences.  Where the one-sided derivatives differ (detected, or listed
    in ``kinks``) both one-sided points are emitted with markers -1 and +1.
    """
    rho = np.unique(np.concatenate([np.asarray(rho, dtype=float), np.asarray(kinks, dtype=float),
                                    np.asarray(getattr(h, "kinks", ()), dtype=float)]))
    has_deriv = getattr(h, "particular_derivative", None) is not None
    known = set(np.asarray(getattr(h, "kinks", ()), dtype=float).tolist()) | set(map(float, kinks))
    out_r, out_p, out_m, found = [], [], [], []
    for r in rho:
        hv = float(h(r))
        if has_deriv:
            left, right = float(h.derivative(r, -1)), float(h.derivative(r, 1))
        else:
            left, right = float(_one_sided(h, r, step, -1)), float(_one_sided(h, r, step, 1))
        is_kink = r in known or abs(right - left) > kink_tol * (1 + abs(left) + abs(right))
        if is_kink:
            found.append(float(r))
            for side, dv in ((-1, left), (1, right)):
                out_r.append(r)
                out_p.append(curve_point(hv, dv, r))
                out_m.append(side)
        else:
            dv = float(h.derivative(r)) if has_deriv else (float(h(r + step)) - float(h(r - step))) / (2 * step)
            out_r.append(r)
            out_p.append(curve_point(hv, dv, r))
            out_m.append(0)
    return Curve1D(np.array(out_r), np.array(out_p), np.array(out_m, dtype=int), found)


def radius_1d(h: Callable, rho, step: float = 1e-3):
    """h'' - h at rho.

    Exact for solutions built by ``solve_1d`` / ``solve_1d_smooth``.  Otherwise
    a fourth-order central difference, evaluated at two step sizes; a large
    disagreement signals a non-smooth point.
    """
    if isinstance(h, Solution1D):
        return h.radius(rho)
    rho = np.asarray(rho, dtype=float)

    def d2(s):
        return (-h(rho + 2 * s) + 16 * h(rho + s) - 30 * h(rho) + 16 * h(rho - s) - h(rho - 2 * s)) / (12 * s * s)

    coarse, fine = d2(2 * step), d2(step)
    if np.any(np.abs(coarse - fine) > 1e-5 * (1 + np.abs(fine))):
        where = rho[np.abs(coarse - fine) > 1e-5 * (1 + np.abs(fine))] if rho.ndim else rho
        raise NonSmoothError(f"radius_1d: h is not C^2 near rho = {np.atleast_1d(where)[:3]}")
    return fine - h(rho)


def arc_length(h: Callable, a: float, b: float, step: float = 1e-4) -> float:
    """Lorentzian length of c over [a, b], integrating |c'| with c' from central differences of c."""

    def speed(r):
        def c(x):
            x = np.atleast_1d(x)
            dv = h.derivative(x) if getattr(h, "particular_derivative", None) is not None else \
                (h(x + 1e-6) - h(x - 1e-6)) / 2e-6
            return curve_point(h(x), dv, x)[0]

        v = (c(r + step) - c(r - step)) / (2 * step)
        return float(np.sqrt(max(v[0] ** 2 - v[1] ** 2, 0.0)))

    return float(quad(speed, a, b, epsabs=1e-10, epsrel=1e-8, limit=200)[0])


def bump(center: float, radius: float):
    """f(t) = (1 - ((t - center)/radius)^2)^3 on |t - center| < radius, with f''."""

    def f(t):
        return PROFILES["poly3"](np.abs(np.asarray(t, dtype=float) - center) / radius)[0]

    def f2(t):
        return PROFILES["poly3"](np.abs(np.asarray(t, dtype=float) - center) / radius)[2] / radius ** 2

    return f, f2


def pairing_residual(h: Callable, mu: OneDimMeasure, center: float, radius: float) -> float:
    """int h (f'' - f) dt - int f dmu for the bump f about center; zero when h'' - h = mu."""
    f, f2 = bump(center, radius)
    lo, hi = center - radius, center + radius
    kinks = [t for t, _ in mu.atoms] + list(getattr(h, "kinks", ()))
    lhs = _quad_split(lambda t: float(h(t)) * (float(f2(t)) - float(f(t))), lo, hi, kinks)
    return lhs - mu.integrate(lambda t: float(f(t)), (lo, hi))
