"""Area measures S_0..S_d: smooth densities, polyhedral weights, collar volumes and the S_1 pairing.

The volume of the collar {k in K : 0 < T(k) <= eps, N(k) in omega}, T the
cosmological time and N the normal of the projection, is the polynomial

    V_eps(omega) = 1/(d+1) * sum_i eps^{d+1-i} binom(d+1, i) S_i(omega).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .lorentz import (direction_from_angles, hyperbolic_distance, log_map, lorentz_norm, minkowski_form,
                      minkowski_sq, origin, polar_to)
from .measures import Bump, QuadratureSpec, sphere_area
from .support.geometry import curvature, maximize_on_hyperbolic, normal_representation
from .support.spec import ConeApex, Constant, PolyhedralMax, Scale, SupportSpec, Sum


# -- regions ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PolarRect:
    """{polar_to(base, rho, Theta) : rho0 <= rho <= rho1, angles in the box}.

    d=1: rho is signed and no angles are used.  d=2: ``angles`` = (theta0,
    theta1).  d=3: ``angles`` = (psi0, psi1, phi0, phi1) (polar, azimuth).
    """

    base: np.ndarray
    rho0: float
    rho1: float
    angles: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        d = self.dim
        if not self.rho1 > self.rho0 or (d > 1 and self.rho0 < 0):
            raise ValueError("empty or invalid radial interval")
        need = {1: 0, 2: 2, 3: 4}[d]
        if len(self.angles) != need:
            raise ValueError(f"PolarRect in d={d} needs {need} angle bounds")
        a = self.angles
        if d >= 2 and not (a[1] > a[0] and a[1] - a[0] <= 2 * np.pi):
            raise ValueError("invalid angular interval")
        if d == 3 and not (0 <= a[0] < a[1] <= np.pi and a[3] > a[2]):
            raise ValueError("invalid angular box")

    @property
    def dim(self) -> int:
        return self.base.shape[-1] - 1

    def area(self) -> float:
        r0, r1, a, d = self.rho0, self.rho1, self.angles, self.dim
        if d == 1:
            return r1 - r0
        if d == 2:
            return (a[1] - a[0]) * (np.cosh(r1) - np.cosh(r0))
        radial = (np.sinh(2 * r1) - np.sinh(2 * r0)) / 4 - (r1 - r0) / 2
        return (a[3] - a[2]) * (np.cos(a[0]) - np.cos(a[1])) * radial

    def contains(self, eta):
        u = log_map(self.base, eta)
        d = self.dim
        if d == 1:
            r = u[..., 0]
            return (r >= self.rho0) & (r <= self.rho1)
        r = np.linalg.norm(u, axis=-1)
        ok = (r >= self.rho0) & (r <= self.rho1)
        a = self.angles
        if d == 2:
            th = np.mod(np.arctan2(u[..., 1], u[..., 0]) - a[0], 2 * np.pi)
            return ok & (th <= a[1] - a[0])
        with np.errstate(invalid="ignore", divide="ignore"):
            psi = np.arccos(np.clip(u[..., 2] / np.where(r > 0, r, 1.0), -1.0, 1.0))
        phi = np.mod(np.arctan2(u[..., 1], u[..., 0]) - a[2], 2 * np.pi)
        return ok & (psi >= a[0]) & (psi <= a[1]) & (phi <= a[3] - a[2])

    def grid(self, n: int = 24) -> np.ndarray:
        """Points covering the region including its boundary."""
        d = self.dim
        r = np.linspace(self.rho0, self.rho1, n)
        if d == 1:
            return polar_to(self.base, r, np.ones((n, 1)))
        a = self.angles
        if d == 2:
            th = np.linspace(a[0], a[1], n)
            R, T = np.meshgrid(r, th, indexing="ij")
            return polar_to(self.base, R, direction_from_angles(T, 2)).reshape(-1, 3)
        ps = np.linspace(a[0], a[1], n // 2 + 2)
        ph = np.linspace(a[2], a[3], n)
        R, Ps, Ph = np.meshgrid(r, ps, ph, indexing="ij")
        dirs = direction_from_angles(np.stack([Ps, Ph], axis=-1), 3)
        return polar_to(self.base, R, dirs).reshape(-1, 4)


def fundamental_domain_d1(period: float, start: float = 0.0) -> PolarRect:
    """One period [start, start + T] of H^1 as a region."""
    return PolarRect(origin(1), start, start + period)


@dataclass
class AreaReport:
    order: int
    value: float
    method: str
    error_estimate: float
    seed: int | None = None

    def csv_row(self) -> str:
        seed = "" if self.seed is None else str(self.seed)
        return f"{self.order},{self.value:.17g},{self.error_estimate:.17g},{self.method},{seed}"


AREA_CSV_HEADER = "order,value,error,method,seed"


# -- smooth and polyhedral area measures ---------------------------------------------

def elementary_symmetric(r, i: int):
    r = np.asarray(r, dtype=float)
    e = [np.ones(r.shape[:-1])] + [np.zeros(r.shape[:-1]) for _ in range(r.shape[-1])]
    for j in range(r.shape[-1]):
        for k in range(j + 1, 0, -1):
            e[k] = e[k] + e[k - 1] * r[..., j]
    return e[i]


def smooth_area_density(s: SupportSpec, eta, i: int):
    """s_i = binom(d, i)^{-1} e_i(r_1, ..., r_d) of the radii of curvature."""
    radii = curvature(s, eta).radii
    d = radii.shape[-1]
    if not 0 <= i <= d:
        raise ValueError("order must be between 0 and d")
    return elementary_symmetric(radii, i) / comb(d, i)


def _wall_length_in(region: PolarRect, normal, n: int = 4001) -> float:
    """Hyperbolic length of wall ∩ region (d=2): membership changes along the geodesic, refined by bisection."""
    base = region.base
    u = minkowski_form(base, normal)
    foot = base - u * normal
    foot = foot / lorentz_norm(foot)
    # unit direction of the wall at the foot: orthogonal to both foot and normal
    w = np.array([foot[1] * normal[2] - foot[2] * normal[1],
                  foot[2] * normal[0] - foot[0] * normal[2],
                  -(foot[0] * normal[1] - foot[1] * normal[0])])
    w = w / np.sqrt(minkowski_sq(w))
    lim = float(hyperbolic_distance(base, foot)) + region.rho1 + 1.0
    t = np.linspace(-lim, lim, n)

    def inside(s):
        s = np.asarray(s, dtype=float)
        return region.contains(np.cosh(s)[..., None] * foot + np.sinh(s)[..., None] * w)

    state = inside(t)
    cuts = []
    for k in np.flatnonzero(state[1:] != state[:-1]):
        lo, hi = t[k], t[k + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if inside(mid) == state[k]:
                lo = mid
            else:
                hi = mid
        cuts.append(0.5 * (lo + hi))
    pts = [t[0]] + cuts + [t[-1]]
    flag = bool(state[0])
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if flag:
            total += b - a
        flag = not flag
    return total


def polyhedral_area(P, region: PolarRect, i: int) -> AreaReport:
    """binom(d, i)^{-1} sum over open i-faces of lambda_i(face) * nu_{d-i}(region ∩ Gauss image).

    Implemented for cells (i=0), facets (i=1, d <= 2) and, in d=2, for the
    2-faces dual to crossings of two walls (i=2, parallelograms).
    """
    d = region.dim
    if not 0 <= i <= d:
        raise ValueError("order must be between 0 and d")
    if i == 0:
        return AreaReport(0, float(region.area()), "polyhedral", 0.0)
    if d == 1:
        if i != 1:
            raise ValueError("order must be 0 or 1 in d = 1")
        total = 0.0
        for a, b, lam, v in P.edges:
            # the facet is the point of H^1 orthogonal to v
            p = np.array([v[1], v[0]]) * np.sign(v[0])
            total += lam * float(region.contains(p))
        return AreaReport(1, total, "polyhedral", 0.0)
    if d != 2:
        raise ValueError("polyhedral_area beyond order 0 is implemented for d <= 2")
    walls = getattr(P.cellulation, "walls", None)
    if walls is None:
        raise ValueError("polyhedral_area needs an arrangement cellulation")
    if i == 1:
        total = sum(w.weight * _wall_length_in(region, w.normal) for w in walls)
        return AreaReport(1, total / comb(d, 1), "polyhedral", 1e-10)
    total = 0.0
    N = np.array([w.normal for w in walls])
    for a in range(len(walls)):
        for b in range(a + 1, len(walls)):
            M = N[[a, b]]
            J = np.diag([1.0, 1.0, -1.0])
            p = np.linalg.svd(M @ J)[2][-1]
            if minkowski_sq(p) >= 0:
                continue
            p = p / lorentz_norm(p) * np.sign(p[-1])
            if region.contains(p):
                u, v = walls[a].weight * N[a], walls[b].weight * N[b]
                gram = minkowski_form(u, u) * minkowski_form(v, v) - minkowski_form(u, v) ** 2
                total += np.sqrt(max(gram, 0.0))
    return AreaReport(2, total, "polyhedral", 0.0)


# -- cosmological time and collar volumes ---------------------------------------------

class OutsideError(ValueError):
    """The point is not in the interior of the F-convex set."""


def _fast_time(s: SupportSpec):
    """Closed-form cosmological time for balls, cones and polyhedral segments, else None.

    Returns a function k -> (r, T, N) vectorized over leading axes.
    """
    t, apex, lam = 0.0, None, 1.0
    spec = s
    if isinstance(spec, Scale):
        lam, spec = spec.factor, spec.spec
    terms = spec.terms if isinstance(spec, Sum) else (spec,)
    consts = [x for x in terms if isinstance(x, Constant)]
    apexes = [x for x in terms if isinstance(x, ConeApex)]
    if len(consts) + len(apexes) == len(terms) and terms:
        t = -lam * sum(c.c for c in consts)
        p = lam * sum(a.p for a in apexes) if apexes else 0.0

        def time(k):
            rel = k - p
            T = lorentz_norm(rel) - t
            N = rel / lorentz_norm(rel)[..., None]
            return k - T[..., None] * N, T, N

        return time
    if isinstance(s, PolyhedralMax) and len(s.vertices) <= 2:
        V = s.vertices

        def time(k):
            a = k - V[0]
            if len(V) == 1:
                r = np.broadcast_to(V[0], k.shape)
            else:
                e = V[1] - V[0]
                lamb = np.clip(minkowski_form(a, e) / minkowski_sq(e), 0.0, 1.0)
                r = V[0] + lamb[..., None] * e
            rel = k - r
            T = lorentz_norm(rel)
            return r, T, rel / T[..., None]

        return time
    return None


def project_and_time(s: SupportSpec, k, radius: float = 6.0):
    """(r, T, N): T(k) = min_eta (h(eta) - <k, eta>_-), N the minimizer, r = k - T N.

    Raises OutsideError if k is not in the interior of the set.
    """
    k = np.asarray(k, dtype=float)
    fast = _fast_time(s)
    if fast is not None:
        with np.errstate(invalid="ignore"):
            r, T, N = fast(k)
        if not np.all(np.isfinite(T)) or np.any(T <= 0) or np.any(minkowski_sq(k - r) >= 0):
            raise OutsideError("project_and_time: point is outside the set")
        return r, T, N
    pts = k.reshape(-1, k.shape[-1])
    if np.any(minkowski_sq(pts) >= 0) or np.any(pts[:, -1] <= 0):
        raise OutsideError("project_and_time: point is outside the future cone")
    centers = pts / lorentz_norm(pts)[:, None]

    def neg_gap(eta, idx):
        return -(s.h(eta) - minkowski_form(pts[idx][:, None, :], eta))

    res = maximize_on_hyperbolic(neg_gap, centers, radius=radius, n_grid=2 ** 10)
    T = -res.value
    if np.any(T <= 0):
        raise OutsideError("project_and_time: point is outside the set")
    N = res.point
    r = pts - T[:, None] * N
    shape = k.shape[:-1]
    return r.reshape(k.shape), T.reshape(shape), N.reshape(k.shape)


def _collar_box(s: SupportSpec, region: PolarRect, eps: float):
    etas = region.grid(32)
    if isinstance(s, PolyhedralMax):
        anchors = s.vertices
        pts = (anchors[:, None, :] + np.array([0.0, eps])[None, :, None, None] * etas[None, None]).reshape(-1,
                                                                                                         etas.shape[-1])
    else:
        chi = normal_representation(s, etas)
        pts = np.concatenate([chi, chi + eps * etas])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = 0.1 * (hi - lo) + 1e-12
    return lo - pad, hi + pad


BLOCK = 200_000


def _collar_counts(s, region, eps_list, n_samples, seed):
    eps_list = np.asarray(eps_list, dtype=float)
    if np.any(eps_list <= 0):
        raise ValueError("eps must be positive")
    lo, hi = _collar_box(s, region, float(eps_list.max()))
    if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
        raise ValueError("bounding box construction failed (unbounded region)")
    vol = float(np.prod(hi - lo))
    n_blocks = -(-n_samples // BLOCK)
    seqs = np.random.SeedSequence(seed).spawn(n_blocks)
    counts = np.zeros(eps_list.size, dtype=np.int64)
    fast = _fast_time(s)
    for b, ss in enumerate(seqs):
        m = min(BLOCK, n_samples - b * BLOCK)
        rng = np.random.Generator(np.random.Philox(ss))
        k = lo + (hi - lo) * rng.uniform(size=(m, lo.size))
        timelike = (minkowski_sq(k) < 0) & (k[:, -1] > 0)
        if fast is not None:
            with np.errstate(invalid="ignore"):
                r, T, N = fast(k)
            ok = timelike & np.isfinite(T) & (minkowski_sq(k - r) < 0) & ((k - r)[:, -1] > 0)
        else:
            ok = timelike.copy()
            T = np.full(m, -1.0)
            N = np.zeros_like(k)
            if ok.any():
                _, T[ok], N[ok] = _generic_time(s, k[ok])
            ok &= T > 0
        inside = np.zeros(m, dtype=bool)
        inside[ok] = region.contains(N[ok])
        for j, e in enumerate(eps_list):
            counts[j] += int(np.count_nonzero(inside & (T > 0) & (T <= e)))
    return counts, vol


def _generic_time(s, k):
    pts = k / lorentz_norm(k)[:, None]

    def neg_gap(eta, idx):
        return -(s.h(eta) - minkowski_form(k[idx][:, None, :], eta))

    res = maximize_on_hyperbolic(neg_gap, pts, radius=6.0, n_grid=2 ** 10)
    T = -res.value
    return k - T[:, None] * res.point, T, res.point


@dataclass
class VolumeEstimate:
    value: float
    stderr: float


def epsilon_volume_mc(s: SupportSpec, region: PolarRect, eps, n_samples: int, seed: int):
    """Monte-Carlo volume of the eps-collar over ``region``; eps may be a list (shared samples)."""
    eps_arr = np.atleast_1d(np.asarray(eps, dtype=float))
    counts, vol = _collar_counts(s, region, eps_arr, n_samples, seed)
    p = counts / n_samples
    est = [VolumeEstimate(vol * pi, vol * np.sqrt(pi * (1 - pi) / n_samples)) for pi in p]
    return est[0] if np.ndim(eps) == 0 else est


def fit_area_polynomial(s: SupportSpec, region: PolarRect, eps_list, n_samples: int, seed: int) -> list:
    """Least-squares S_0..S_d from V_eps = 1/(d+1) sum_i eps^{d+1-i} binom(d+1, i) S_i."""
    d = region.dim
    eps_arr = np.asarray(eps_list, dtype=float)
    if eps_arr.size < d + 1:
        raise ValueError("fit_area_polynomial: need at least d+1 values of eps")
    # one bounding box per eps, so small collars are not sampled at the resolution of the largest
    per = max(n_samples // eps_arr.size, 1)
    seeds = np.random.SeedSequence(seed).generate_state(eps_arr.size)
    est = [epsilon_volume_mc(s, region, float(e), per, int(sd)) for e, sd in zip(eps_arr, seeds)]
    V = np.array([e.value for e in est])
    sig = np.array([max(e.stderr, 1e-300) for e in est])
    B = np.stack([eps_arr ** (d + 1 - i) * comb(d + 1, i) / (d + 1) for i in range(d + 1)], axis=1)
    coef, *_ = np.linalg.lstsq(B / sig[:, None], V / sig, rcond=None)
    cov = np.linalg.pinv((B / sig[:, None]).T @ (B / sig[:, None]))
    err = np.sqrt(np.diag(cov))
    return [AreaReport(i, float(coef[i]), "mc-fit", float(err[i]), seed) for i in range(d + 1)]


def integrate_density(s: SupportSpec, region: PolarRect, i: int, n: int = 64) -> float:
    """int_region s_i dH^d by Gauss-Legendre in polar coordinates (d = 1, 2)."""
    d = region.dim
    g, w = np.polynomial.legendre.leggauss(n)
    r = 0.5 * (region.rho1 - region.rho0) * (g + 1) + region.rho0
    wr = 0.5 * (region.rho1 - region.rho0) * w
    if d == 1:
        pts = polar_to(region.base, r, np.ones((n, 1)))
        return float(np.sum(wr * smooth_area_density(s, pts, i)))
    if d != 2:
        raise ValueError("integrate_density is implemented for d <= 2")
    a0, a1 = region.angles
    th = 0.5 * (a1 - a0) * (g + 1) + a0
    wt = 0.5 * (a1 - a0) * w
    R, T = np.meshgrid(r, th, indexing="ij")
    pts = polar_to(region.base, R, direction_from_angles(T, 2))
    dens = smooth_area_density(s, pts, i)
    return float(np.sum(dens * np.sinh(R) * wr[:, None] * wt[None, :]))


# -- distributional S_1 --------------------------------------------------------------------

def s1_pairing(h: SupportSpec, f: Bump, q: QuadratureSpec | None = None) -> float:
    """int h ((1/d) Delta f - f) dH^d over the support of the bump, in polar coordinates about its center."""
    q = q or QuadratureSpec(n_radial=128, n_angular=256)
    d = f.dim
    if q.rho_max is not None and q.rho_max < f.radius:
        raise ValueError("s1_pairing: bump support exceeds the quadrature domain")
    g, w = np.polynomial.legendre.leggauss(q.n_radial)
    r = 0.5 * f.radius * (g + 1)
    wr = 0.5 * f.radius * w
    fr, df, d2f = f.radial(r)
    lap = d2f + (d - 1) * df / np.tanh(r)
    test = lap / d - fr
    if d == 1:
        dirs, wa = np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    elif d == 2:
        th = np.arange(q.n_angular) * (2 * np.pi / q.n_angular)
        dirs, wa = direction_from_angles(th, 2), np.full(q.n_angular, 2 * np.pi / q.n_angular)
    else:
        gp, wp = np.polynomial.legendre.leggauss(q.n_angular // 2)
        psi = 0.5 * np.pi * (gp + 1)
        nphi = q.n_angular
        phi = np.arange(nphi) * (2 * np.pi / nphi)
        Ps, Ph = np.meshgrid(psi, phi, indexing="ij")
        dirs = direction_from_angles(np.stack([Ps, Ph], axis=-1), 3).reshape(-1, 3)
        wa = (0.5 * np.pi * wp[:, None] * np.sin(psi)[:, None] * (2 * np.pi / nphi) * np.ones(nphi)).ravel()
    pts = polar_to(f.center, r[:, None], dirs[None])
    if not np.all(h.contains(pts)):
        raise ValueError("s1_pairing: bump support exceeds the domain of the support function")
    vals = h.h(pts)
    return float(np.sum(wr * test * np.sinh(r) ** (d - 1) * (vals * wa).sum(axis=1)))


def bump_trace_integral(f: Bump, normal, n: int = 4001) -> float:
    """int over the wall <x, normal>_- = 0 of the bump, in d = 2 (a line integral)."""
    c = f.center
    u = minkowski_form(c, normal)
    foot = c - u * normal
    foot = foot / lorentz_norm(foot)
    b = np.sqrt(1 + u * u)
    if b >= np.cosh(f.radius):
        return 0.0
    half = np.arccosh(np.cosh(f.radius) / b)
    g, w = np.polynomial.legendre.leggauss(n // 20 + 40)
    t = half * g
    rho = np.arccosh(np.cosh(t) * b)
    return float(np.sum(half * w * f.radial(rho)[0]))
