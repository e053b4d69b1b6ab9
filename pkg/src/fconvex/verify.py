"""Self-contained invariant suites, runnable from the command line."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import area, christoffel, one_dim, polyhedral
from .lorentz import minkowski_form, origin, random_hpoints
from .measures import Bump, MeasureSpec, Wall
from .support import duality
from .support.spec import ConeApex, Constant, elementary_profile


@dataclass
class CheckResult:
    suite: str
    check: str
    passed: bool
    value: float
    tolerance: float


def _check(suite, name, value, tol, passed=None) -> CheckResult:
    value = float(value)
    ok = bool(value <= tol) if passed is None else bool(passed)
    return CheckResult(suite, name, ok, value, float(tol))


def halfplane_point(u, w):
    """Upper half-plane (u, w) to the hyperboloid, with the geodesic u = 0 on the wall of normal (1, 0, 0)."""
    u, w = np.asarray(u, dtype=float), np.asarray(w, dtype=float)
    return np.stack([u / w, (u * u + w * w - 1) / (2 * w), (u * u + w * w + 1) / (2 * w)], axis=-1)


def halfplane_dw(u, w):
    """d/dw of ``halfplane_point``."""
    u, w = np.asarray(u, dtype=float), np.asarray(w, dtype=float)
    return np.stack([-u / w ** 2, (w * w - u * u + 1) / (2 * w * w), (w * w - u * u - 1) / (2 * w * w)], axis=-1)


def suite_kernel(seed: int = 0) -> list:
    out = []
    rho = np.linspace(0.05, 10.0, 200)
    for d in (1, 2, 3):
        res = christoffel.kernel_ode_residual(christoffel.KernelContext(d), rho)
        out.append(_check("kernel", f"ode_residual_d{d}", res, 1e-6))
    ctx1 = christoffel.KernelContext(1)
    out.append(_check("kernel", "d1_closed_form", np.abs(christoffel.kernel_k(ctx1, rho) + np.exp(-rho) / 2).max(),
                      1e-12))
    ctx2 = christoffel.KernelContext(2)
    out.append(_check("kernel", "d2_closed_vs_quadrature",
                      abs(christoffel.kernel_k(ctx2, 1.0) - christoffel.kernel_quadrature(ctx2, 1.0)), 1e-9))
    return out


def suite_polyhedral(seed: int = 0, n_cases: int = 20) -> list:
    rng = np.random.default_rng(seed)
    worst_path, worst_s1, closure_ok, gauss_ok = 0.0, 0.0, True, True
    for _ in range(n_cases):
        arr = polyhedral.random_arrangement(rng, int(rng.integers(1, 6)))
        P = polyhedral.build_polyhedron(arr, seed=int(rng.integers(2 ** 31)))
        closure_ok &= polyhedral.check_closure(arr).ok
        worst_path = max(worst_path, polyhedral.verify_path_independence(P, 20, seed))
        gauss_ok &= polyhedral.verify_gauss_decomposition(P).ok
        worst_s1 = max(worst_s1, polyhedral.recompute_s1(P).max_deviation)
    one = polyhedral.build_polyhedron(polyhedral.Arrangement((Wall(np.array([1.0, 0.0, 0.0]), 1.0),)), base="-")
    verts = sorted(map(tuple, one.vertex_array().tolist()))
    return [_check("polyhedral", "closure", 0.0, 0.0, closure_ok),
            _check("polyhedral", "path_independence", worst_path, 1e-9),
            _check("polyhedral", "gauss_decomposition", 0.0, 0.0, gauss_ok),
            _check("polyhedral", "s1_edge_lengths", worst_s1, 1e-10),
            _check("polyhedral", "one_wall_vertices", 0.0, 0.0, verts == [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)])]


def suite_elementary(seed: int = 0) -> list:
    """One unit wall in H^2: kernel solution, closed form, and the sign of its curvature."""
    rng = np.random.default_rng(seed)
    v = np.array([1.0, 0.0, 0.0])
    ctx = christoffel.KernelContext(2)
    mu = MeasureSpec(2, walls=(Wall(v, 1.0),))
    pts = random_hpoints(rng, 20, 2, radius=2.0)
    err = np.abs(christoffel.solve_measure(ctx, mu, pts) - christoffel.elementary_closed_form(1.0, v, pts)).max()
    s = elementary_profile(1.0, v)
    u = rng.uniform(-2.0, 2.0, 5)
    w = rng.uniform(0.5, 2.0, 5)
    u = np.where(np.abs(u) < 0.05, 0.3, u)
    x, X = halfplane_point(u, w), halfplane_dw(u, w)
    z = u / w
    # value of the reverse second fundamental form on d/dw, from the ambient Hessian of H
    rii = _ambient_form(s, x, X)
    expected = (1 / np.pi) * (1 - z * z) / (w * w * (1 + z * z) ** 2)
    rep = christoffel.check_solution_convexity(ctx, mu, halfplane_point(np.array([1.5]), np.array([1.0])))
    return [_check("elementary", "solve_measure_vs_closed_form", err, 1e-4),
            _check("elementary", "reverse_II_dw_dw", np.abs(rii - expected).max(), 1e-3),
            _check("elementary", "violation_beyond_unit_slope", rep.min_eigenvalue, 0.0, rep.verdict == "violated")]


def _ambient_form(s, x, X, step: float = 1e-4):
    """X^T Hess(H) X at x, by central differences of the 1-homogeneous extension along X."""
    Hp, H0, Hm = s.H(x + step * X), s.H(x), s.H(x - step * X)
    return (Hp - 2 * H0 + Hm) / step ** 2


def suite_area(seed: int = 0) -> list:
    e = origin(2)
    disk = area.PolarRect(e, 0.0, 0.3, (0.0, 2 * np.pi))
    A = disk.area()
    fits = area.fit_area_polynomial(Constant(-1.0), disk, [0.05, 1.0, 20.0], 10 ** 6, seed)
    cone = area.fit_area_polynomial(ConeApex(np.zeros(3)), disk, [0.05, 1.0, 20.0], 10 ** 6, seed)
    out = [_check("area", f"ball_S{i}", abs(r.value / A - 1), 0.03) for i, r in enumerate(fits)]
    out.append(_check("area", "cone_S0", abs(cone[0].value / A - 1), 0.03))
    out += [_check("area", f"cone_S{i}", abs(cone[i].value / A), 0.03) for i in (1, 2)]
    rect = area.PolarRect(e, 0.0, 1.0, (-0.5, 0.5))
    one = polyhedral.build_polyhedron(polyhedral.Arrangement((Wall(np.array([0.0, 1.0, 0.0]), 1.0),)))
    out.append(_check("area", "one_wall_S1", abs(area.polyhedral_area(one, rect, 1).value - 0.5), 1e-9))
    return out


def suite_duality(seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    pts = random_hpoints(rng, 10, 2, radius=1.0)
    out = []
    for t in (0.5, 2.0):
        R = duality.radial_function(Constant(-t), pts).value
        out.append(_check("duality", f"radial_ball_{t}", np.abs(R - t).max(), 1e-8))
        # the zero-apex cone only fixes the dimension
        D = duality.dual(Constant(-t) + ConeApex(np.zeros(3)), rho_max=1.0, n_rho=4, n_theta=8)
        nodes = D.field.node_points()
        out.append(_check("duality", f"dual_ball_{t}", np.abs(D.h(nodes) + 1 / t).max(), 1e-8))
    ez = np.array([0.0, 0.0, 1.0])
    D = duality.dual(Constant(-1.0) + ConeApex(ez), rho_max=1.0, n_rho=4, n_theta=5)
    nodes = D.field.node_points().reshape(-1, 3)[:20]
    target = minkowski_form(nodes, nodes) / (-2 * minkowski_form(ez, nodes))
    out.append(_check("duality", "dual_ball_plus_cone", np.abs(D.h(nodes) - target).max(), 1e-6))
    return out


def suite_one_dim(seed: int = 0) -> list:
    mu = one_dim.OneDimMeasure(((0.0, 1.0),))
    h = one_dim.solve_1d(mu)
    pair = max(abs(one_dim.pairing_residual(h, mu, c, R)) for c, R in ((0.0, 1.0), (0.4, 2.0), (-0.7, 1.5)))
    r, a = np.meshgrid(np.linspace(-3, 3, 61), np.linspace(0, 3, 31))
    convex = one_dim.convexity_1d(lambda t: np.abs(np.sinh(t)) / 2, r, a)
    concave = one_dim.convexity_1d(lambda t: np.exp(-np.abs(t)) / 2, r, a)
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(-3, 3, 6))
    w = rng.uniform(0.2, 2.0, 6)
    P = polyhedral.build_d1(t, w)
    inv = polyhedral.build_invariant_d1(1.0, [0.5], [1.0])
    return [_check("one-dim", "dirac_pairing", pair, 1e-8),
            _check("one-dim", "convex_abs_sinh", convex.min_eigenvalue, 0.0, convex.ok),
            _check("one-dim", "concave_exp_fails", concave.min_eigenvalue, 0.0, not concave.ok),
            _check("one-dim", "build_d1_edge_lengths", polyhedral.recompute_s1(P).max_deviation, 1e-12 * w.max()),
            _check("one-dim", "cocycle", inv.cocycle_report.residual, 1e-10, inv.cocycle_report.ok),
            _check("one-dim", "coboundary_residual", inv.coboundary_residual, 1e-10)]


SUITES = {"kernel": suite_kernel, "polyhedral": suite_polyhedral, "elementary": suite_elementary,
          "area": suite_area, "duality": suite_duality, "one-dim": suite_one_dim}


def run_suite(name: str, seed: int = 0) -> list:
    if name not in SUITES:
        raise KeyError(f"unknown verification suite {name!r}; known: {sorted(SUITES)}")
    return SUITES[name](seed)


def results_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "check", "passed", "value", "tolerance"])
    for r in results:
        w.writerow([r.suite, r.check, int(r.passed), f"{r.value:.17g}", f"{r.tolerance:.17g}"])
    return buf.getvalue()
