"""Evaluation, normal representation, curvature and convexity certificates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..lorentz import (exp_map, is_future_timelike, lorentz_norm, minkowski_form, origin, polar_to,
                       tangent_frame)
from .spec import NonDifferentiableError, PolyhedralMax, Scale, SupportSpec, Sum

FD_STEP = 1e-4
CONVEXITY_TOL = 1e-8
INEQUALITY_TOL = 1e-9

CERTIFIED = "certified-on-samples"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"


@dataclass
class CurvatureData:
    reverse_II: np.ndarray
    radii: np.ndarray

    @property
    def mean_radius(self):
        return self.radii.mean(axis=-1)


@dataclass
class ConvexityReport:
    """Outcome of a sampled convexity test.

    ``min_eigenvalue`` is the smallest quantity tested (an eigenvalue of the
    reverse second fundamental form, or the slack of an inequality).  The
    verdict only ever speaks about the samples that were examined.
    """

    verdict: str
    witnesses: list = field(default_factory=list)
    min_eigenvalue: float = float("nan")
    n_samples: int = 0
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return self.verdict == CERTIFIED


def _points(x):
    x = np.asarray(x, dtype=float)
    return x[None] if x.ndim == 1 else x


def eval_h(s: SupportSpec, eta):
    return s.h(np.asarray(eta, dtype=float))


def extend_H(s: SupportSpec, x):
    x = np.asarray(x, dtype=float)
    if not np.all(is_future_timelike(x)):
        raise ValueError("extend_H: argument is not future time-like")
    return s.H(x)


def minkowski_sum(a: SupportSpec, b: SupportSpec) -> SupportSpec:
    return Sum((a, b))


def scale(lam: float, s: SupportSpec) -> SupportSpec:
    if not lam > 0:
        raise ValueError("scale: factor must be strictly positive")
    return Scale(float(lam), s)


# -- finite differences in geodesic normal coordinates ---------------------------

def _shifted_values(s, eta, offsets):
    """h at exp_eta(offset) for frame-coordinate offsets of shape (m, d)."""
    pts = exp_map(eta[..., None, :], offsets)
    return s.h(pts)


def fd_gradient(s: SupportSpec, eta, step: float = FD_STEP):
    """Frame coordinates of the Riemannian gradient by centered differences."""
    eta = np.asarray(eta, dtype=float)
    d = eta.shape[-1] - 1
    I = np.eye(d) * step
    vals = _shifted_values(s, eta, np.concatenate([I, -I]))
    return (vals[..., :d] - vals[..., d:]) / (2 * step)


def fd_hessian(s: SupportSpec, eta, step: float = FD_STEP):
    """Riemannian Hessian in normal coordinates (Christoffel symbols vanish at the center)."""
    eta = np.asarray(eta, dtype=float)
    d = eta.shape[-1] - 1
    f0 = s.h(eta)
    I = np.eye(d) * step
    offs = [I, -I]
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    for i, j in pairs:
        offs.append(np.array([I[i] + I[j], I[i] - I[j], -I[i] + I[j], -I[i] - I[j]]))
    vals = _shifted_values(s, eta, np.concatenate(offs))
    hess = np.empty(eta.shape[:-1] + (d, d))
    for i in range(d):
        hess[..., i, i] = (vals[..., i] - 2 * f0 + vals[..., d + i]) / step ** 2
    for k, (i, j) in enumerate(pairs):
        b = 2 * d + 4 * k
        v = (vals[..., b] - vals[..., b + 1] - vals[..., b + 2] + vals[..., b + 3]) / (4 * step ** 2)
        hess[..., i, j] = hess[..., j, i] = v
    return hess


def fd_reverse_II(s: SupportSpec, eta, step: float = FD_STEP):
    eta = np.asarray(eta, dtype=float)
    d = eta.shape[-1] - 1
    return fd_hessian(s, eta, step) - s.h(eta)[..., None, None] * np.eye(d)


def fd_normal_representation(s: SupportSpec, eta, step: float = FD_STEP):
    eta = np.asarray(eta, dtype=float)
    grad = np.einsum("...ij,...j->...i", tangent_frame(eta), fd_gradient(s, eta, step))
    return grad - s.h(eta)[..., None] * eta


def normal_representation(s: SupportSpec, eta, finite_differences: bool = False):
    """chi(eta) = grad h - h eta; raises NonDifferentiableError at polyhedral ties."""
    eta = np.asarray(eta, dtype=float)
    chi = None if finite_differences else s.chi(eta)
    return fd_normal_representation(s, eta) if chi is None else chi


def curvature(s: SupportSpec, eta, finite_differences: bool = False) -> CurvatureData:
    eta = np.asarray(eta, dtype=float)
    rii = None if finite_differences else s.reverse_II(eta)
    if rii is None:
        rii = fd_reverse_II(s, eta)
    rii = 0.5 * (rii + np.swapaxes(rii, -1, -2))
    return CurvatureData(rii, np.linalg.eigvalsh(rii))


# -- convexity certificates ------------------------------------------------------

def _report(slack, points, tol, extra=None, skipped=0):
    slack = np.asarray(slack, dtype=float)
    n = slack.size
    if n == 0:
        return ConvexityReport(INCONCLUSIVE, [], float("nan"), 0, skipped)
    bad = np.flatnonzero(slack.ravel() < -tol)
    witnesses = []
    for i in bad[:20]:
        w = {"index": int(i), "point": np.asarray(points)[i].tolist(), "value": float(slack.ravel()[i])}
        if extra is not None:
            w.update(extra(i))
        witnesses.append(w)
    verdict = VIOLATED if bad.size else CERTIFIED
    return ConvexityReport(verdict, witnesses, float(slack.min()), n, skipped)


def check_convexity_pointwise(s: SupportSpec, samples, tol: float = CONVEXITY_TOL) -> ConvexityReport:
    """Minimum eigenvalue of the reverse second fundamental form over the samples."""
    samples = _points(samples)
    try:
        data = curvature(s, samples)
        keep = np.arange(len(samples))
    except NonDifferentiableError:
        # sample by sample, skipping face normals of polyhedral parts
        keep, mats = [], []
        for i, eta in enumerate(samples):
            try:
                mats.append(curvature(s, eta).reverse_II)
                keep.append(i)
            except NonDifferentiableError:
                pass
        keep = np.asarray(keep, dtype=int)
        if not keep.size:
            return ConvexityReport(INCONCLUSIVE, [], float("nan"), 0, len(samples))
        rii = np.asarray(mats)
        data = CurvatureData(rii, np.linalg.eigvalsh(rii))
    lam = data.radii[..., 0]
    vecs = np.linalg.eigh(data.reverse_II)[1]
    E = tangent_frame(samples[keep])

    def extra(i):
        return {"direction": (E[i] @ vecs[i][:, 0]).tolist(), "radii": data.radii[i].tolist()}

    return _report(lam, samples[keep], tol, extra, skipped=len(samples) - keep.size)


def check_radial_convexity(s: SupportSpec, base, direction, samples, tol: float = INEQUALITY_TOL) -> ConvexityReport:
    """h(rho+a) + h(rho-a) >= 2 cosh(a) h(rho) along the geodesic through base with direction Theta."""
    base = np.asarray(base, dtype=float)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    rho, alpha = samples[:, 0], samples[:, 1]
    direction = np.asarray(direction, dtype=float)

    def h_at(r):
        return s.h(polar_to(base, r, direction))

    slack = h_at(rho + alpha) + h_at(rho - alpha) - 2 * np.cosh(alpha) * h_at(rho)
    return _report(slack, samples, tol)


def check_subadditivity(s: SupportSpec, first, second, tol: float = INEQUALITY_TOL) -> ConvexityReport:
    """H(x+y) <= H(x) + H(y) for the sampled pairs of future time-like vectors."""
    x, y = _points(first), _points(second)
    slack = s.H(x) + s.H(y) - s.H(x + y)
    return _report(slack, np.concatenate([x, y], axis=-1), tol)


# -- support planes at infinity --------------------------------------------------

INFINITY_RADII = (5.0, 10.0, 20.0)
DIVERGENCE_THRESHOLD = 1e6


def support_at_infinity(s: SupportSpec, direction, base=None) -> float:
    """lim h(rho, Theta)/cosh(rho), sampled at rho = 5, 10, 20; +-inf when diverging.

    A limit is declared infinite when the ratio at rho=20 exceeds the
    threshold, or when the successive ratios keep increasing in magnitude
    with growing steps (slow power-type growth).
    """
    direction = np.asarray(direction, dtype=float)
    base = origin(direction.shape[-1]) if base is None else np.asarray(base, dtype=float)
    r = np.array(INFINITY_RADII)
    ratio = s.h(polar_to(base, r, direction)) / np.cosh(r)
    d1, d2 = ratio[1] - ratio[0], ratio[2] - ratio[1]
    growing = abs(d2) > abs(d1) and np.sign(d1) == np.sign(d2) and abs(d2) > 1.0
    if abs(ratio[2]) > DIVERGENCE_THRESHOLD or growing:
        return float(np.sign(ratio[2]) * np.inf)
    return float(ratio[2])


# -- maximization over H^d ------------------------------------------------------

def coarse_grid(d: int, radius: float, n: int) -> np.ndarray:
    """Frame coordinates of a Fibonacci-style grid of n points filling the ball of given radius."""
    k = np.arange(n) + 0.5
    if d == 1:
        return np.linspace(-radius, radius, n)[:, None]
    ga = np.pi * (3.0 - np.sqrt(5.0))
    if d == 2:
        r = radius * np.sqrt(k / n)
        return np.stack([r * np.cos(ga * k), r * np.sin(ga * k)], axis=-1)
    z = 1.0 - 2.0 * ((k * 0.6180339887498949) % 1.0)
    phi = ga * k
    r = radius * (k / n) ** (1.0 / 3.0)
    s = np.sqrt(1 - z * z)
    return r[:, None] * np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)


@dataclass
class MaxResult:
    point: np.ndarray
    value: np.ndarray
    error: np.ndarray


def maximize_on_hyperbolic(fun, centers, radius: float = 5.0, n_grid: int = 2 ** 12,
                           golden_steps: int = 50, sweeps: int = 6, chunk: int = 64) -> MaxResult:
    """Maximize ``fun`` over H^d near each center: coarse grid, then golden-section sweeps.

    ``fun(points, i)`` receives points of shape (m, k, d+1) for the centers
    with indices ``i`` (shape (m,)) and returns values of shape (m, k).
    Non-finite values are ignored.  The error estimate is the improvement of
    the last sweep.
    """
    centers = _points(centers)
    m, n1 = centers.shape
    d = n1 - 1
    grid = np.concatenate([np.zeros((1, d)), coarse_grid(d, radius, n_grid)])
    best_u = np.empty((m, d))
    best_v = np.empty(m)
    for lo in range(0, m, chunk):
        idx = np.arange(lo, min(m, lo + chunk))
        pts = exp_map(centers[idx, None, :], grid[None])
        vals = np.where(np.isfinite(v := fun(pts, idx)), v, -np.inf)
        j = vals.argmax(axis=1)
        best_u[idx] = grid[j]
        best_v[idx] = vals[np.arange(idx.size), j]
    spacing = radius * (np.pi / n_grid) ** (1.0 / d) * 2.0 if d > 1 else 2.0 * radius / n_grid
    g = (np.sqrt(5.0) - 1.0) / 2.0
    idx_all = np.arange(m)
    p = exp_map(centers, best_u)
    err = np.full(m, np.inf)
    delta = 2.0 * spacing
    for sweep in range(sweeps):
        start = best_v.copy()
        for axis in range(d):
            e = np.zeros(d)
            e[axis] = 1.0

            def f(t):
                q = exp_map(p, t[:, None] * e)
                v = fun(q[:, None, :], idx_all)[:, 0]
                return np.where(np.isfinite(v), v, -np.inf)

            a = np.full(m, -delta)
            b = np.full(m, delta)
            c1 = b - g * (b - a)
            c2 = a + g * (b - a)
            f1, f2 = f(c1), f(c2)
            for _ in range(golden_steps):
                left = f1 > f2
                a, b = np.where(left, a, c1), np.where(left, c2, b)
                c1, c2 = (np.where(left, b - g * (b - a), c2), np.where(left, c1, a + g * (b - a)))
                fe = f(np.where(left, c1, c2))
                f1, f2 = np.where(left, fe, f2), np.where(left, f1, fe)
            t = 0.5 * (a + b)
            ft = f(t)
            improve = ft > best_v
            p = np.where(improve[:, None], exp_map(p, t[:, None] * e), p)
            p = p / lorentz_norm(p)[:, None]
            best_v = np.where(improve, ft, best_v)
        err = np.abs(best_v - start)
        delta = max(delta * 0.5, 1e-6)
    return MaxResult(p, best_v, err)
