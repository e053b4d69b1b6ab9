"""Kernel solutions of (1/d) Delta h - h = mu on H^d.

The kernel is

    k(rho) = cosh(rho) / v_{d-1} * int_inf^rho dt / (sinh^{d-1} t cosh^2 t),

G(x, y) = k(dist(x, y)), and a solution is h = d * int G(., y) dmu(y).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .lorentz import (boost_to, check_dim, exp_map, hyperbolic_distance, log_map, lorentz_norm, minkowski_form,
                      origin, tangent_frame)
from .measures import Bump, Density, MeasureSpec, QuadratureSpec, sphere_area
from .support.geometry import ConvexityReport, _report, support_at_infinity

SINGULAR_RADIUS = 1e-6
TAIL_TOL = 1e-14


class SingularPointError(ValueError):
    """Query point on an atom (d >= 2), where G is singular."""


class TruncationError(ValueError):
    """The quadrature domain does not contain the support of the data."""


@dataclass(frozen=True)
class KernelContext:
    d: int

    def __post_init__(self):
        check_dim(self.d)

    @property
    def v(self) -> float:
        return sphere_area(self.d - 1)

    def area(self, rho):
        """A(rho) = v_{d-1} sinh^{d-1}(rho), the area of a geodesic sphere."""
        return self.v * np.sinh(rho) ** (self.d - 1)


def _check_rho(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("kernel_k: rho must be positive")
    return rho


def _tail_integral(d: int, rho):
    """J(rho) = int_inf^rho dt / (sinh^{d-1} t cosh^2 t) (negative), in cancellation-free form."""
    if d == 1:
        return -2.0 / (np.exp(2 * rho) + 1.0)
    if d == 3:
        return -4.0 / np.expm1(4 * rho)
    # d = 2: with x = e^{-rho}, -J = 2 atanh(x) - 2x/(1+x^2) = sum_m 2 x^{2m+1} (1/(2m+1) - (-1)^m)
    x = np.exp(-rho)
    direct = 2 * np.arctanh(x) - 2 * x / (1 + x * x)
    x2 = x * x
    series = np.zeros_like(x)
    term = 2 * x
    for m in range(1, 12):
        term = term * x2
        series = series + term * (1.0 / (2 * m + 1) - (-1) ** m)
    return -np.where(x < 0.1, series, direct)


def kernel_k(ctx: KernelContext, rho):
    rho = _check_rho(rho)
    if ctx.d == 1:
        return -0.5 * np.exp(-rho)
    return np.cosh(rho) * _tail_integral(ctx.d, rho) / ctx.v


def kernel_derivatives(ctx: KernelContext, rho):
    """(k, k', k'') from the closed forms; they satisfy the radial ODE identically."""
    rho = _check_rho(rho)
    d, v = ctx.d, ctx.v
    J = _tail_integral(d, rho)
    k = kernel_k(ctx, rho)
    k1 = (np.sinh(rho) * J + 1.0 / (np.sinh(rho) ** (d - 1) * np.cosh(rho))) / v
    k2 = k + (1 - d) / (v * np.sinh(rho) ** d)
    if d == 1:
        k1, k2 = 0.5 * np.exp(-rho), k
    return k, k1, k2


def kernel_quadrature(ctx: KernelContext, rho: float) -> float:
    """Independent evaluation of k by adaptive quadrature with the tail substitution u = e^{-t}."""
    d = ctx.d
    if rho <= 0:
        raise ValueError("rho must be positive")

    def integrand(u):
        t = -np.log(u)
        return 1.0 / (np.sinh(t) ** (d - 1) * np.cosh(t) ** 2 * u)

    val, _ = quad(integrand, 0.0, np.exp(-rho), epsabs=0.0, epsrel=1e-13, limit=200)
    return -np.cosh(rho) * val / ctx.v


def kernel_ode_residual(ctx: KernelContext, rho, analytic: bool = True, pointwise: bool = False):
    """max |k'' + (A'/A) k' - d k| over the grid (the array of residuals if ``pointwise``).

    With ``analytic`` False the derivatives are 5-point differences of k.
    """
    rho = _check_rho(rho)
    d = ctx.d
    if analytic:
        k, k1, k2 = kernel_derivatives(ctx, rho)
    else:
        h = 1e-3 * np.minimum(1.0, rho)
        f = [kernel_k(ctx, rho + j * h) for j in (-2, -1, 0, 1, 2)]
        k = f[2]
        k1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
        k2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    res = k2 + (d - 1) / np.tanh(rho) * k1 - d * k
    return np.abs(res) if pointwise else float(np.max(np.abs(res)))


def green(ctx: KernelContext, x, y):
    return kernel_k(ctx, hyperbolic_distance(x, y))


# -- polar quadrature about the query point ------------------------------------

def _graded_nodes(a: float, b: float, n: int, gamma: float):
    """Gauss-Legendre nodes on [a, b] pulled towards both ends by u^g / (u^g + (1-u)^g)."""
    u, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (u + 1.0)
    w = 0.5 * w
    p, q = u ** gamma, (1 - u) ** gamma
    s = p / (p + q)
    ds = gamma * (u ** (gamma - 1) * q + p * (1 - u) ** (gamma - 1)) / (p + q) ** 2
    return a + (b - a) * s, (b - a) * w * ds


def _radial_segments(D: float, R: float):
    if D < R:
        return [(0.0, R - D), (R - D, R + D)] if D > 0 else [(0.0, R)]
    return [(D - R, D + R)]


def _direction_to(x, c, D, d):
    if D <= 0:
        e = np.zeros(d)
        e[0] = 1.0
        return e
    u = log_map(x, c)
    return u / np.linalg.norm(u)


def _sphere_quadrature(d: int, rho, D: float, R: float, n_ang: int):
    """Angular nodes covering the part of the rho-sphere about x that meets the bump ball.

    Returns (psi, phi, weights) with weights of the unit-sphere measure; psi is
    the angle to the direction of the bump center, phi the azimuth (d=3).
    Shapes broadcast as (n_rho, n_nodes).
    """
    rho = np.asarray(rho, dtype=float)[:, None]
    if D > 0:
        c0 = (np.cosh(rho) * np.cosh(D) - np.cosh(R)) / (np.sinh(rho) * np.sinh(D))
        psi_max = np.arccos(np.clip(c0, -1.0, 1.0))
    else:
        psi_max = np.full(rho.shape, np.pi)
    if d == 1:
        psi = np.array([[0.0, np.pi]]) + 0 * rho
        return psi, None, np.ones_like(psi)
    u, w = np.polynomial.legendre.leggauss(n_ang)
    if d == 2:
        psi = psi_max * u[None, :]
        return psi, None, psi_max * w[None, :]
    psi = 0.5 * psi_max * (u[None, :] + 1.0)
    wpsi = 0.5 * psi_max * w[None, :] * np.sin(psi)
    n_phi = max(8, n_ang // 2)
    phi = np.arange(n_phi) * (2 * np.pi / n_phi)
    psi = np.repeat(psi, n_phi, axis=1)
    wts = np.repeat(wpsi, n_phi, axis=1) * (2 * np.pi / n_phi)
    return psi, np.tile(phi, n_ang)[None, :] + 0 * psi, wts


def _bump_dist(rho, D, psi):
    ch = np.cosh(rho)[:, None] * np.cosh(D) - np.sinh(rho)[:, None] * np.sinh(D) * np.cos(psi)
    return np.arccosh(np.maximum(ch, 1.0))


def _radial_plan(x, bump: Bump, q: QuadratureSpec):
    D = float(hyperbolic_distance(x, bump.center))
    R = bump.radius
    if q.rho_max is not None and q.rho_max < D + R:
        raise TruncationError("solve_smooth: support of the density extends past rho_max")
    return D, R, _radial_segments(D, R)


def _bump_kernel_integral(ctx: KernelContext, bump: Bump, x, q: QuadratureSpec, radial_weight):
    """int_0^inf radial_weight(rho) int_{S_rho(x)} bump dA_rho drho."""
    d = ctx.d
    D, R, segs = _radial_plan(x, bump, q)
    total = 0.0
    for a, b in segs:
        if b <= a:
            continue
        rho, w = _graded_nodes(a, b, q.n_radial, q.grading)
        psi, _, wa = _sphere_quadrature(d, rho, D, R, q.n_angular)
        f = bump.radial(_bump_dist(rho, D, psi))[0]
        inner = (f * wa).sum(axis=1) * np.sinh(rho) ** (d - 1)
        total += np.sum(w * radial_weight(rho) * inner)
    return total


def solve_smooth(ctx: KernelContext, phi, x, q: QuadratureSpec | None = None):
    """h_phi(x) = d int_0^inf k(rho) int_{S_rho(x)} phi dA_rho drho for a density of bumps.

    Vectorized over leading axes of x (evaluated point by point).
    """
    q = q or QuadratureSpec()
    dens = phi if isinstance(phi, Density) else Density((phi,)) if isinstance(phi, Bump) else phi
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, x.shape[-1])
    out = np.empty(flat.shape[0])
    kern = lambda r: kernel_k(ctx, r)
    for i, p in enumerate(flat):
        out[i] = ctx.d * sum(_bump_kernel_integral(ctx, b, p, q, kern) for b in dens.bumps)
    return out.reshape(x.shape[:-1])


def elementary_closed_form(a: float, v, x):
    """(a/pi) [u arctan(1/u) - 1] with u = <x, v>_-; the value at u = 0 is -a/pi."""
    u = np.abs(minkowski_form(np.asarray(x, dtype=float), np.asarray(v, dtype=float)))
    # arctan2(1, u) = arctan(1/u) for u > 0 and stays finite at u = 0
    return a / np.pi * (u * np.arctan2(1.0, u) - 1.0)


def wall_integral(ctx: KernelContext, wall, x) -> float:
    """a v_{d-2} int_0^inf k(acosh(cosh r * b)) sinh^{d-2} r dr, b = cosh dist(x, wall).

    The wall term of the kernel solution; by the hyperbolic Pythagorean
    relation the distance from x to the wall point at polar radius r about the
    foot of x is acosh(cosh(r) b).
    """
    d = ctx.d
    u = float(minkowski_form(x, wall.normal))
    if d == 1:
        return wall.weight * float(kernel_k(ctx, np.arcsinh(abs(u)))) if u != 0 else -0.5 * wall.weight
    b = np.sqrt(1.0 + u * u)

    def integrand(r):
        # cosh(rho) - 1 = 2 sinh^2(r/2) b + u^2/(b+1), kept free of cancellation
        excess = 2 * np.sinh(0.5 * r) ** 2 * b + u * u / (b + 1.0)
        rho = 2 * np.arcsinh(np.sqrt(0.5 * excess))
        if rho == 0:
            return 0.0 if d == 2 else -1.0 / (4 * np.pi)
        return float(kernel_k(ctx, rho)) * np.sinh(r) ** (d - 2)

    # truncate where the integrand (~ e^{-2 r}) drops below the tail tolerance; r = s^2 near
    # the foot point tames the logarithmic singularity of k when x lies on the wall
    r_end = 0.5 * np.log(1.0 / TAIL_TOL) + 5.0
    near, _ = quad(lambda s: 2 * s * integrand(s * s), 0.0, 1.0, epsabs=1e-15, epsrel=1e-12, limit=200)
    far, _ = quad(integrand, 1.0, r_end, epsabs=1e-15, epsrel=1e-12, limit=200)
    val = near + far
    return wall.weight * sphere_area(d - 2) * val


def solve_measure(ctx: KernelContext, mu: MeasureSpec, x, q: QuadratureSpec | None = None):
    """h_mu(x) = sum d w G(x, y_i) + wall terms + solve_smooth(density)."""
    if mu.dim != ctx.d:
        raise ValueError("measure dimension does not match the kernel context")
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, x.shape[-1])
    out = np.zeros(flat.shape[0])
    d = ctx.d
    for atom in mu.atoms:
        dist = hyperbolic_distance(flat, atom.point)
        if d >= 2 and np.any(dist < SINGULAR_RADIUS):
            raise SingularPointError("solve_measure: query point coincides with an atom")
        safe = np.maximum(dist, 1e-300)
        out += d * atom.weight * np.where(dist > 0, kernel_k(ctx, safe), -0.5)
    for wall in mu.walls:
        out += np.array([wall_integral(ctx, wall, p) for p in flat])
    if mu.density is not None and mu.density.bumps:
        out += solve_smooth(ctx, mu.density, flat, q)
    return out.reshape(x.shape[:-1])


def extended(func):
    """1-homogeneous extension of a function on H^d."""

    def H(y):
        y = np.asarray(y, dtype=float)
        n = lorentz_norm(y)
        return n * func(y / n[..., None])

    return H


def convexity_lambda(ctx: KernelContext, mu: MeasureSpec, eta, nu, q: QuadratureSpec | None = None):
    """int (Gamma(eta, y) + Gamma(nu, y) - Gamma(eta + nu, y)) dmu(y), Gamma the extended kernel.

    Uses the same normalization as solve_measure; nonnegative on all pairs
    iff h_mu is subadditive, i.e. a support function.
    """
    H = extended(lambda p: solve_measure(ctx, mu, p, q))
    eta = np.asarray(eta, dtype=float)
    nu = np.asarray(nu, dtype=float)
    return H(eta) + H(nu) - H(eta + nu)


def check_solution_convexity(ctx: KernelContext, mu: MeasureSpec, points, q: QuadratureSpec | None = None,
                             delta: float = 0.05, tol: float = 1e-9) -> ConvexityReport:
    """Subadditivity of h_mu on pairs (p, exp_p(delta u)) for frame axes and diagonals u.

    For nearby pairs the slack is a second-order quantity with the sign of the
    reverse second fundamental form in the direction u.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, ctx.d + 1)
    dirs = list(np.eye(ctx.d))
    for i in range(ctx.d):
        for j in range(i + 1, ctx.d):
            for sgn in (1.0, -1.0):
                dirs.append((np.eye(ctx.d)[i] + sgn * np.eye(ctx.d)[j]) / np.sqrt(2.0))
    dirs = np.array(dirs)
    eta = np.repeat(pts, len(dirs), axis=0)
    nu = exp_map(eta, delta * np.tile(dirs, (len(pts), 1)))
    lam = convexity_lambda(ctx, mu, eta, nu, q)
    scale = delta * delta
    rep = _report(lam / scale, eta, tol, extra=lambda i: {"partner": nu[i].tolist()})
    return rep


def convexity_integral_smooth(ctx: KernelContext, phi, x, X, q: QuadratureSpec | None = None) -> float:
    """int_0^inf (v_{d-1} sinh^d rho)^-1 int_{S_rho(x)} [|X|^2 - d g(grad rho_y, X)^2] phi dA_rho drho.

    ``X`` is given in the frame coordinates of ``tangent_frame(x)``.
    """
    q = q or QuadratureSpec()
    d = ctx.d
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    dens = phi if isinstance(phi, Density) else Density((phi,))
    X2 = float(X @ X)
    total = 0.0
    for bump in dens.bumps:
        D, R, segs = _radial_plan(x, bump, q)
        u = _direction_to(x, bump.center, D, d)
        cb = float(u @ X)
        perp = X - cb * u
        sb = float(np.linalg.norm(perp))
        for a, b in segs:
            if b <= a:
                continue
            rho, w = _graded_nodes(a, b, q.n_radial, q.grading)
            psi, az, wa = _sphere_quadrature(d, rho, D, R, q.n_angular)
            f = bump.radial(_bump_dist(rho, D, psi))[0]
            if d == 1:
                gX = np.cos(psi) * cb
            elif d == 2:
                # the sign of the perpendicular component is irrelevant: psi ranges symmetrically
                gX = np.cos(psi) * cb + np.sin(psi) * sb
            else:
                gX = np.cos(psi) * cb + np.sin(psi) * np.cos(az) * sb
            inner = ((X2 - d * gX ** 2) * f * wa).sum(axis=1) * np.sinh(rho) ** (d - 1)
            total += np.sum(w * inner / (ctx.v * np.sinh(rho) ** d))
    return float(total)


def residual_wave(h, phi, x, step: float = 5e-3):
    """|(1/d) box H(x) - phi(x)| with box the ambient wave operator on the 1-homogeneous extension.

    ``h`` is a SupportSpec (anything with ``.h``) or a callable on H^d.  The
    wave operator is Lorentz invariant, so it is evaluated at e_{d+1} on
    H o L with L a boost taking e_{d+1} to x; there the 5-point central
    differences along the coordinate axes are well conditioned.
    """
    func = h.h if hasattr(h, "h") else h
    H = extended(func)
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, x.shape[-1])
    n = flat.shape[1]
    d = n - 1
    e = origin(d)
    offs = np.concatenate([e[None] + j * step * np.eye(n) for j in (-2, -1, 0, 1, 2)])
    coef = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / (12 * step * step)
    out = np.empty(flat.shape[0])
    for i, p in enumerate(flat):
        vals = H(offs @ boost_to(p).T).reshape(5, n)
        second = coef @ vals
        box = second[:d].sum() - second[d]
        target = phi(p) if callable(phi) else phi
        out[i] = abs(box / d - float(target))
    return out.reshape(x.shape[:-1])


def fuchsian_solve_d1(period: float, phi, x, nodes: int = 64):
    """h(x) = -int e^{-|s-x|}/2 phi(s) ds for T-periodic phi, by summing periodic images.

    The line integral is folded onto the period centered at x; the folded
    kernel sum_n e^{-|u + nT|}/2 is truncated when the next image is below
    1e-14, and each half-period is integrated by Gauss-Legendre.
    """
    T = float(period)
    if not T > 0:
        raise ValueError("period must be positive")
    n_img = int(np.ceil(np.log(1.0 / TAIL_TOL) / T + 1.0))
    images = np.arange(-n_img, n_img + 1) * T
    g, w = np.polynomial.legendre.leggauss(nodes)
    u = np.concatenate([(g - 1.0) * T / 4, (g + 1.0) * T / 4])
    wu = np.concatenate([w, w]) * T / 4
    kern = 0.5 * np.exp(-np.abs(u[:, None] + images[None, :])).sum(axis=1)
    x = np.asarray(x, dtype=float)
    s = x[..., None] + u
    return -(np.asarray(phi(s), dtype=float) * kern * wu).sum(axis=-1)


@dataclass
class UniquenessReport:
    limits_first: list
    limits_second: list
    equal: list
    all_equal: bool


def check_uniqueness_at_infinity(h1, h2, directions, tol: float = 1e-6, base=None) -> UniquenessReport:
    """Compare the boundary functions lim h_i(rho, Theta)/cosh(rho) of two solutions."""
    l1, l2, eq = [], [], []
    for th in np.atleast_2d(np.asarray(directions, dtype=float)):
        a = support_at_infinity(h1, th, base)
        b = support_at_infinity(h2, th, base)
        l1.append(a)
        l2.append(b)
        if np.isinf(a) or np.isinf(b):
            eq.append(bool(a == b))
        else:
            eq.append(bool(abs(a - b) <= tol * max(1.0, abs(a), abs(b))))
    return UniquenessReport(l1, l2, eq, all(eq))
