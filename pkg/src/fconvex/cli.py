"""Command-line front end: one YAML job file per run.

    fconvex JOB.yaml [--require-convex] [--out DIR]

Exit codes: 0 success, 1 failed verification suite, 2 invalid configuration,
3 numerical refusal (singular query, truncation, non-differentiable or
out-of-domain point), 4 convexity violation when --require-convex is set.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import sympy as sp
import yaml

from . import area, christoffel, one_dim, polyhedral, verify
from .fields import OutOfDomainError
from .lorentz import check_dim, direction_from_angles, hpoint, origin, polar_to, random_hpoints
from .measures import MeasureSpec, Wall, measure_from_dict, quadrature_from_dict
from .support import duality
from .support.geometry import check_convexity_pointwise, curvature, normal_representation
from .support.spec import NonDifferentiableError, SupportSpec, from_dict

TASKS = ("kernel", "solve-smooth", "solve-measure", "solve-poly", "solve-1d", "convexity", "area", "dual",
         "sample-surface", "verify")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_REFUSAL, EXIT_NOT_CONVEX = 0, 1, 2, 3, 4

REFUSALS = (christoffel.SingularPointError, christoffel.TruncationError, NonDifferentiableError, OutOfDomainError,
            one_dim.NonSmoothError, one_dim.TailIntegrabilityError, area.OutsideError)


class ConfigError(ValueError):
    pass


@dataclass
class RunReport:
    task: str
    wall_time: float = 0.0
    results: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    convex: bool | None = None

    def warn(self, op: str, location, message: str):
        self.warnings.append({"op": op, "location": location, "message": message})

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return str(x)


# -- config helpers -------------------------------------------------------------

def _require(cfg: dict, *keys):
    for k in keys:
        if k not in cfg:
            raise ConfigError(f"task {cfg.get('task')!r} requires field {k!r}")


def axis_values(spec) -> np.ndarray:
    """[start, stop, num] for a linspace, or {values: [...]} for explicit values."""
    if isinstance(spec, dict):
        return np.asarray(spec["values"], dtype=float)
    if isinstance(spec, (list, tuple)) and len(spec) == 3:
        return np.linspace(float(spec[0]), float(spec[1]), int(spec[2]))
    raise ConfigError(f"grid axis must be [start, stop, num] or {{values: [...]}}, got {spec!r}")


@dataclass
class Grid:
    """Query points with their polar coordinates (rho, angles) about ``base``."""

    points: np.ndarray
    coords: np.ndarray
    coord_names: list
    shape: tuple


def query_grid(cfg: dict, d: int, seed: int) -> Grid:
    """Query points from ``points``, ``random`` {n, radius} or a polar grid {base, rho, theta | psi, phi}."""
    if "points" in cfg:
        pts = hpoint(np.asarray(cfg["points"], dtype=float))
        if pts.shape[-1] != d + 1:
            raise ConfigError("query points have the wrong dimension")
        return Grid(pts.reshape(-1, d + 1), np.zeros((pts.reshape(-1, d + 1).shape[0], 0)), [], (len(pts),))
    if "random" in cfg:
        r = cfg["random"]
        pts = random_hpoints(np.random.default_rng(seed), int(r["n"]), d, float(r.get("radius", 2.0)))
        return Grid(pts, np.zeros((len(pts), 0)), [], (len(pts),))
    base = origin(d) if cfg.get("base") is None else hpoint(cfg["base"])
    rho = axis_values(cfg.get("rho", [0.0, 1.0, 5]))
    if d == 1:
        pts = polar_to(base, np.abs(rho), np.sign(rho + (rho == 0))[:, None])
        return Grid(pts, rho[:, None], ["rho"], (rho.size,))
    if d == 2:
        theta = axis_values(cfg.get("theta", [0.0, 2 * np.pi * (1 - 1 / 8), 8]))
        R, T = np.meshgrid(rho, theta, indexing="ij")
        pts = polar_to(base, R, direction_from_angles(T, 2))
        return Grid(pts.reshape(-1, 3), np.stack([R.ravel(), T.ravel()], axis=1), ["rho", "theta"], R.shape)
    psi = axis_values(cfg.get("psi", [0.3, np.pi - 0.3, 4]))
    phi = axis_values(cfg.get("phi", [0.0, 2 * np.pi * (1 - 1 / 6), 6]))
    R, P, F = np.meshgrid(rho, psi, phi, indexing="ij")
    pts = polar_to(base, R, direction_from_angles(np.stack([P, F], axis=-1), 3))
    return Grid(pts.reshape(-1, 4), np.stack([R.ravel(), P.ravel(), F.ravel()], axis=1), ["rho", "psi", "phi"],
                R.shape)


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _metadata_line(cfg: dict) -> str:
    keep = {k: cfg[k] for k in ("task", "dim", "seed", "quadrature", "tolerances") if k in cfg}
    return "# " + json.dumps(keep, sort_keys=True, default=_jsonable)


def write_table(path: Path, cfg: dict, header: list, rows) -> None:
    lines = [_metadata_line(cfg), ",".join(header)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else _fmt(v) for v in r))
    path.write_text("\n".join(lines) + "\n")


def _density_1d(data: dict) -> one_dim.Density1D:
    t = sp.Symbol("t")
    f = sp.lambdify(t, sp.sympify(data["expr"]), "numpy")
    func = lambda s: np.broadcast_to(f(s), np.shape(s)).astype(float) if np.ndim(s) else float(f(s))
    return one_dim.Density1D(func, tuple(data["support"]) if "support" in data else None,
                             tuple(data["growth"]) if "growth" in data else None,
                             tuple(map(float, data.get("breakpoints", ()))))


# -- tasks ----------------------------------------------------------------------

def task_kernel(cfg, out, rep):
    ctx = christoffel.KernelContext(cfg["dim"])
    rho = axis_values(cfg.get("rho", [0.05, 10.0, 200]))
    k = christoffel.kernel_k(ctx, rho)
    res = christoffel.kernel_ode_residual(ctx, rho, pointwise=True)
    rep.residuals["ode_residual_max"] = float(np.abs(res).max())
    write_table(out / "kernel.csv", cfg, ["rho", "k", "ode_residual"], zip(rho, k, res))
    rep.outputs.append("kernel.csv")


def _solution_table(cfg, out, rep, name, grid, values, extra=None):
    d = cfg["dim"]
    header = grid.coord_names + [f"x{i + 1}" for i in range(d + 1)] + ["h"] + (list(extra) if extra else [])
    cols = [grid.coords, grid.points, values[:, None]] + ([np.column_stack(list(extra.values()))] if extra else [])
    write_table(out / name, cfg, header, np.column_stack(cols))
    rep.outputs.append(name)


def _measure_convexity(cfg, rep, ctx, mu, grid, q):
    if not cfg.get("check_convexity", True):
        return
    pts = grid.points[np.linspace(0, len(grid.points) - 1, min(len(grid.points), 12)).astype(int)]
    c = christoffel.check_solution_convexity(ctx, mu, pts, q)
    rep.results["convexity_verdict"] = c.verdict
    rep.results["convexity_min_slack"] = c.min_eigenvalue
    rep.convex = c.ok
    if c.verdict == "violated":
        rep.warn("check_solution_convexity", c.witnesses[0]["point"],
                 f"solution not convex: slack {c.witnesses[0]['value']:.3g} towards {c.witnesses[0]['partner']}")


def task_solve_smooth(cfg, out, rep):
    _require(cfg, "density")
    d = cfg["dim"]
    mu = measure_from_dict({"dim": d, "density": cfg["density"]})
    q = quadrature_from_dict(cfg.get("quadrature"))
    ctx = christoffel.KernelContext(d)
    grid = query_grid(cfg.get("query", {}), d, cfg["seed"])
    h = christoffel.solve_smooth(ctx, mu.density, grid.points, q)
    extra = None
    if cfg.get("residuals", False):
        func = lambda p: christoffel.solve_smooth(ctx, mu.density, p, q)
        res = christoffel.residual_wave(func, mu.density, grid.points)
        rep.residuals["wave_residual_max"] = float(res.max())
        extra = {"residual": res}
    _solution_table(cfg, out, rep, "solution.csv", grid, h, extra)
    _measure_convexity(cfg, rep, ctx, mu, grid, q)


def task_solve_measure(cfg, out, rep):
    _require(cfg, "measure")
    d = cfg["dim"]
    mu = measure_from_dict({"dim": d, **cfg["measure"]})
    q = quadrature_from_dict(cfg.get("quadrature"))
    ctx = christoffel.KernelContext(d)
    grid = query_grid(cfg.get("query", {}), d, cfg["seed"])
    h = christoffel.solve_measure(ctx, mu, grid.points, q)
    _solution_table(cfg, out, rep, "solution.csv", grid, h)
    _measure_convexity(cfg, rep, ctx, mu, grid, q)


def task_solve_poly(cfg, out, rep):
    _require(cfg, "walls")
    if cfg["dim"] == 1:
        # walls of H^1 are points t
        P = polyhedral.build_d1([float(w["t"]) for w in cfg["walls"]], [float(w["weight"]) for w in cfg["walls"]])
    else:
        walls = tuple(Wall(np.asarray(w["normal"], dtype=float), float(w["weight"])) for w in cfg["walls"])
        P = polyhedral.build_polyhedron(polyhedral.Arrangement(walls), cfg.get("base_cell"), seed=cfg["seed"])
    (out / "vertices.csv").write_text(_metadata_line(cfg) + "\n" + P.to_csv())
    rep.outputs.append("vertices.csv")
    rep.results["n_cells"] = len(P.cells)
    rep.residuals["s1_max_deviation"] = polyhedral.recompute_s1(P).max_deviation
    for w in P.warnings:
        rep.warn("build_polyhedron", None, w)
    rep.convex = True


def task_solve_1d(cfg, out, rep):
    atoms = [(float(a["t"]), float(a["weight"])) for a in cfg.get("atoms", [])]
    dens = _density_1d(cfg["density"]) if "density" in cfg else None
    mu = one_dim.OneDimMeasure(tuple(atoms), dens)
    h = one_dim.solve_1d(mu, float(cfg.get("A", 0.0)), float(cfg.get("B", 0.0)))
    t = axis_values(cfg.get("t", [-3.0, 3.0, 61]))
    write_table(out / "solution.csv", cfg, ["t", "h"], zip(t, h(t)))
    curve = one_dim.curve_from_support(h, t)
    (out / "curve.csv").write_text(_metadata_line(cfg) + "\n" + curve.to_csv())
    rep.outputs += ["solution.csv", "curve.csv"]
    r, a = np.meshgrid(t, np.linspace(0.0, float(cfg.get("alpha_max", 3.0)), 31))
    c = one_dim.convexity_1d(h, r, a)
    rep.results["convexity_verdict"] = c.verdict
    rep.convex = c.ok
    if not c.ok:
        rep.warn("convexity_1d", c.witnesses[0], "solution not convex")
    rep.results["kinks"] = curve.kinks


def task_convexity(cfg, out, rep):
    _require(cfg, "spec")
    s = from_dict(cfg["spec"])
    d = cfg["dim"]
    grid = query_grid(cfg.get("query", {}), d, cfg["seed"])
    c = check_convexity_pointwise(s, grid.points)
    rep.results.update(verdict=c.verdict, min_eigenvalue=c.min_eigenvalue, n_samples=c.n_samples,
                       skipped=c.skipped)
    rep.convex = c.ok
    if c.verdict == "violated":
        rep.warn("check_convexity_pointwise", c.witnesses[0]["point"], f"eigenvalue {c.witnesses[0]['value']:.3g}")
    if c.skipped == 0:
        radii = curvature(s, grid.points).radii
        header = grid.coord_names + [f"x{i + 1}" for i in range(d + 1)] + [f"r{i + 1}" for i in range(d)]
        write_table(out / "radii.csv", cfg, header, np.column_stack([grid.coords, grid.points, radii]))
        rep.outputs.append("radii.csv")


def _region(cfg: dict, d: int) -> area.PolarRect:
    base = origin(d) if cfg.get("base") is None else hpoint(cfg["base"])
    return area.PolarRect(base, float(cfg.get("rho0", 0.0)), float(cfg["rho1"]), tuple(cfg.get("angles", ())))


def task_area(cfg, out, rep):
    _require(cfg, "region")
    d = cfg["dim"]
    region = _region(cfg["region"], d)
    method = cfg.get("method", "mc")
    if method == "mc":
        _require(cfg, "spec")
        reports = area.fit_area_polynomial(from_dict(cfg["spec"]), region, cfg.get("eps", [0.05, 1.0, 20.0]),
                                           int(cfg.get("samples", 10 ** 6)), cfg["seed"])
    elif method == "density":
        _require(cfg, "spec")
        s = from_dict(cfg["spec"])
        reports = [area.AreaReport(i, area.integrate_density(s, region, i), "density", 0.0)
                   for i in range(d + 1)]
    elif method == "polyhedral":
        _require(cfg, "walls")
        walls = tuple(Wall(np.asarray(w["normal"], dtype=float), float(w["weight"])) for w in cfg["walls"])
        P = polyhedral.build_polyhedron(polyhedral.Arrangement(walls), seed=cfg["seed"])
        reports = [area.polyhedral_area(P, region, i) for i in range(d + 1) if i <= 2]
    else:
        raise ConfigError(f"unknown area method {method!r}")
    lines = [_metadata_line(cfg), area.AREA_CSV_HEADER] + [r.csv_row() for r in reports]
    (out / "area.csv").write_text("\n".join(lines) + "\n")
    rep.outputs.append("area.csv")
    rep.results["region_area"] = region.area()
    rep.results["S"] = [r.value for r in reports]


def task_dual(cfg, out, rep):
    _require(cfg, "spec")
    g = cfg.get("grid", {})
    D = duality.dual(from_dict(cfg["spec"]), float(g.get("rho_max", 1.5)), int(g.get("n_rho", 16)),
                     int(g.get("n_theta", 24)), None if g.get("base") is None else hpoint(g["base"]))
    (out / "dual.csv").write_text(_metadata_line(cfg) + "\n" + D.field.to_csv())
    rep.outputs.append("dual.csv")


def sample_surface(s: SupportSpec, grid: Grid) -> str:
    """Mesh text: header 'vertices N faces M', then 'x1 .. xn s1 flag' lines and 0-based face index lines.

    flag is 0 for regular vertices and 1 for non-differentiable points (coordinates nan).
    A spec whose normal representation is a single point (a cone) is written as
    one vertex with flag 2, the full sphere of normals.
    """
    pts = grid.points
    d = pts.shape[-1] - 1
    chi = np.full(pts.shape, np.nan)
    s1 = np.full(len(pts), np.nan)
    flag = np.zeros(len(pts), dtype=int)
    for i, p in enumerate(pts):
        try:
            chi[i] = normal_representation(s, p)
            s1[i] = np.trace(curvature(s, p).reverse_II) / d
        except NonDifferentiableError:
            flag[i] = 1
    good = flag == 0
    if good.sum() > 1 and np.allclose(chi[good], chi[good][0], atol=1e-12, rtol=0):
        body = " ".join(_fmt(x) for x in chi[good][0]) + f" {_fmt(s1[good][0])} 2"
        return "vertices 1 faces 0\n" + body + "\n"
    faces = []
    if d == 2 and len(grid.shape) == 2:
        n0, n1 = grid.shape
        for i in range(n0 - 1):
            for j in range(n1 - 1):
                a, b, c, e = i * n1 + j, i * n1 + j + 1, (i + 1) * n1 + j + 1, (i + 1) * n1 + j
                faces += [(a, b, c), (a, c, e)]
    elif d == 1:
        faces = [(i, i + 1) for i in range(len(pts) - 1)]
    lines = [f"vertices {len(pts)} faces {len(faces)}"]
    lines += [" ".join(_fmt(x) for x in chi[i]) + f" {_fmt(s1[i])} {flag[i]}" for i in range(len(pts))]
    lines += [" ".join(str(k) for k in f) for f in faces]
    return "\n".join(lines) + "\n"


def task_sample_surface(cfg, out, rep):
    _require(cfg, "spec")
    s = from_dict(cfg["spec"])
    grid = query_grid(cfg.get("query", {}), cfg["dim"], cfg["seed"])
    text = sample_surface(s, grid)
    (out / "surface.mesh").write_text(text)
    rep.outputs.append("surface.mesh")
    vals = np.array([float(line.split()[-2]) for line in text.splitlines()[1:1 + int(text.split()[1])]])
    rep.residuals["max_abs_s1"] = float(np.nanmax(np.abs(vals))) if np.isfinite(vals).any() else None


def task_verify(cfg, out, rep):
    suites = cfg.get("suites", cfg.get("suite", list(verify.SUITES)))
    suites = [suites] if isinstance(suites, str) else list(suites)
    results = []
    for name in suites:
        if name not in verify.SUITES:
            raise ConfigError(f"unknown verification suite {name!r}")
        results += verify.run_suite(name, cfg["seed"])
    (out / "verify.csv").write_text(verify.results_csv(results))
    rep.outputs.append("verify.csv")
    rep.results["checks"] = [{"suite": r.suite, "check": r.check, "passed": r.passed} for r in results]
    rep.results["all_passed"] = all(r.passed for r in results)
    for r in results:
        if not r.passed:
            rep.warn(f"verify.{r.suite}", r.check, f"value {r.value:.3g} exceeds tolerance {r.tolerance:.3g}")


HANDLERS = {"kernel": task_kernel, "solve-smooth": task_solve_smooth, "solve-measure": task_solve_measure,
            "solve-poly": task_solve_poly, "solve-1d": task_solve_1d, "convexity": task_convexity,
            "area": task_area, "dual": task_dual, "sample-surface": task_sample_surface, "verify": task_verify}


def load_config(path) -> dict:
    try:
        cfg = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    _require(cfg, "task")
    if cfg["task"] not in TASKS:
        raise ConfigError(f"unknown task {cfg['task']!r}; known: {', '.join(TASKS)}")
    if cfg["task"] != "verify":
        _require(cfg, "dim")
        try:
            check_dim(int(cfg["dim"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        cfg["dim"] = int(cfg["dim"])
    cfg["seed"] = int(cfg.get("seed", 0))
    return cfg


def run(config_path, out_dir=None, require_convex: bool = False) -> int:
    t0 = time.perf_counter()
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out_dir if out_dir is not None else cfg.get("out", Path(config_path).parent / "out"))
    out.mkdir(parents=True, exist_ok=True)
    rep = RunReport(cfg["task"])
    code = EXIT_OK
    try:
        HANDLERS[cfg["task"]](cfg, out, rep)
    except REFUSALS as exc:
        rep.warn(cfg["task"], None, f"{type(exc).__name__}: {exc}")
        code = EXIT_REFUSAL
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        print(f"config error in task {cfg['task']}: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    if code == EXIT_OK:
        if cfg["task"] == "verify" and not rep.results.get("all_passed", False):
            code = EXIT_VERIFY
        elif require_convex and rep.convex is False:
            code = EXIT_NOT_CONVEX
    rep.wall_time = time.perf_counter() - t0
    (out / "report.json").write_text(rep.to_json())
    for w in rep.warnings:
        print(f"warning [{w['op']}] at {w['location']}: {w['message']}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="fconvex", description="Run one fconvex job described by a YAML file.")
    p.add_argument("config", help="YAML job file")
    p.add_argument("--out", help="output directory (default: the config's 'out' field or ./out next to it)")
    p.add_argument("--require-convex", action="store_true", help="exit 4 when the convexity check fails")
    args = p.parse_args(argv)
    return run(args.config, args.out, args.require_convex)


if __name__ == "__main__":
    sys.exit(main())
