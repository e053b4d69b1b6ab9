"""Polyhedral F-convex sets from weighted cell decompositions of H^d.

Crossing the facet between adjacent cells xi and xi' moves the vertex by
lambda * v(xi, xi'), v the unit space-like normal of the facet pointing into
xi'.  Summing along a path of cells from a base cell gives the vertex X(xi);
the closure condition at codimension-2 faces makes the sum path independent.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .lorentz import (CocycleD1, LorentzIsometry, boost_d1, coboundary_solve_d1, cocycle_check,
                      minkowski_form, minkowski_sq, spacelike_unit)
from .measures import Wall
from .support.spec import PolyhedralMax

CLOSURE_TOL = 1e-9
SMALL_WEIGHT = 1e-12


# -- cellulations ----------------------------------------------------------------

@dataclass(frozen=True)
class Arrangement:
    """Cells of H^d cut out by finitely many weighted totally geodesic hypersurfaces."""

    walls: tuple

    def __post_init__(self):
        walls = tuple(self.walls)
        object.__setattr__(self, "walls", walls)
        for i, j in combinations(range(len(walls)), 2):
            a, b = walls[i].normal, walls[j].normal
            if np.allclose(a, b, atol=1e-12) or np.allclose(a, -b, atol=1e-12):
                raise ValueError("arrangement walls must be pairwise distinct")

    @property
    def dim(self) -> int:
        return self.walls[0].normal.shape[0] - 1 if self.walls else None


@dataclass(frozen=True, eq=False)
class Facet:
    """Facet between cells[0] and cells[1]; ``normal`` points into cells[1]."""

    cells: tuple
    weight: float
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "normal", spacelike_unit(self.normal))
        if not self.weight > 0:
            raise ValueError("facet weights must be positive")


@dataclass(frozen=True, eq=False)
class Ridge:
    """A codimension-2 face: the incident facets and their unit tangents u(eta, zeta) at the face."""

    point: np.ndarray
    facets: tuple
    directions: np.ndarray


@dataclass(frozen=True, eq=False)
class Explicit:
    """A hand-built finite cell complex; ``samples`` maps each cell to an interior point."""

    cells: tuple
    facets: tuple
    ridges: tuple = ()
    samples: dict = field(default_factory=dict)

    def __post_init__(self):
        cells = set(self.cells)
        for f in self.facets:
            if len(f.cells) != 2 or f.cells[0] == f.cells[1] or not set(f.cells) <= cells:
                raise ValueError("each facet must bound exactly two distinct known cells")
        for r in self.ridges:
            if len(r.facets) != len(r.directions):
                raise ValueError("malformed ridge incidence")
            for k in r.facets:
                if not 0 <= k < len(self.facets):
                    raise ValueError("malformed ridge incidence")


@dataclass
class ClosureReport:
    ok: bool
    max_residual: float
    residuals: list = field(default_factory=list)
    analytic: bool = False


def check_closure(c, tol: float = CLOSURE_TOL) -> ClosureReport:
    """Sum of lambda(zeta) u(eta, zeta) over the facets around each codimension-2 face."""
    if isinstance(c, Arrangement):
        # every wall through a ridge contributes +u and -u with the same weight
        return ClosureReport(True, 0.0, [], analytic=True)
    res = []
    for r in c.ridges:
        w = np.array([c.facets[k].weight for k in r.facets])
        s = (w[:, None] * np.asarray(r.directions, dtype=float)).sum(axis=0)
        res.append(float(np.sqrt(abs(minkowski_sq(s))) if s.shape[-1] == len(r.point) else np.linalg.norm(s)))
    worst = max(res, default=0.0)
    return ClosureReport(worst <= tol, worst, res)


# -- cell enumeration --------------------------------------------------------------

def _klein_to_hyperboloid(y):
    y = np.asarray(y, dtype=float)
    n2 = np.sum(y * y, axis=-1)
    return np.concatenate([y, np.ones(y.shape[:-1] + (1,))], axis=-1) / np.sqrt(1.0 - n2)[..., None]


def _ball_samples(rng, n, d, r_max=0.999999):
    g = rng.normal(size=(n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (r_max * rng.uniform(size=n) ** (1.0 / d))[:, None]


def _probe_points(normals, d, rng):
    """Klein-model probes near wall intersections and near where walls meet the ideal boundary."""
    # in the Klein model each wall is the affine hyperplane <(y,1), v> = 0, i.e. a.y = b
    A = normals[:, :-1]
    b = normals[:, -1]
    probes = []
    n = len(normals)
    for k in range(1, min(d, n) + 1):
        for idx in combinations(range(n), k):
            M, rhs = A[list(idx)], b[list(idx)]
            y, *_ = np.linalg.lstsq(M, rhs, rcond=None)
            if np.linalg.norm(y) >= 1:
                # project toward the disk when the flat misses it
                y = y / np.linalg.norm(y) * 0.999
            for eps in (1e-3, 1e-6):
                probes.append(y + eps * rng.normal(size=(8 * d, d)))
            if k == 1 and d >= 2:
                # points of the wall near the ideal boundary
                nrm = M[0] / np.linalg.norm(M[0])
                basis = np.linalg.svd(np.eye(d) - np.outer(nrm, nrm))[0][:, : d - 1]
                dirs = rng.normal(size=(16, d - 1)) @ basis.T
                dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
                base = rhs[0] / np.linalg.norm(M[0]) * nrm
                reach = np.sqrt(max(1 - base @ base, 0.0))
                for f in (0.9, 0.999, 0.99999):
                    pts = base + f * reach * dirs
                    probes.append(pts[:, None, :] + 1e-7 * rng.normal(size=(16, 4, d)))
    if not probes:
        return np.zeros((0, d))
    P = np.concatenate([p.reshape(-1, d) for p in probes])
    return P[np.sum(P * P, axis=1) < 1 - 1e-12]


@dataclass
class CellComplex:
    """Realized cells (sign vectors) of an arrangement with interior sample points."""

    signs: np.ndarray
    samples: list
    adjacency: list


def enumerate_cells(arr: Arrangement, n_samples: int = 20000, seed: int = 0) -> CellComplex:
    """Sign vectors realized on H^d by dense Klein-model sampling plus probes near intersections.

    Complete at desk scale for up to about 8 walls; two realized cells are
    adjacent iff their sign vectors differ in one wall (cells are convex in
    the Klein model, so the segment between them crosses only that wall).
    """
    d = arr.dim
    normals = np.array([w.normal for w in arr.walls])
    rng = np.random.default_rng(seed)
    Y = np.concatenate([_ball_samples(rng, n_samples, d), _probe_points(normals, d, rng)])
    eta = _klein_to_hyperboloid(Y)
    vals = minkowski_form(eta[:, None, :], normals[None, :, :])
    scale = np.abs(vals).max(axis=1, initial=1.0)
    clear = np.all(np.abs(vals) > 1e-12 * np.maximum(scale, 1.0)[:, None], axis=1)
    eta, vals = eta[clear], vals[clear]
    sg = np.where(vals > 0, 1, -1).astype(np.int8)
    uniq, inverse = np.unique(sg, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    samples = []
    for c in range(len(uniq)):
        idx = np.flatnonzero(inverse == c)
        # keep the samples farthest from the walls
        margin = np.abs(vals[idx]).min(axis=1) / np.linalg.norm(eta[idx], axis=1)
        samples.append(eta[idx[np.argsort(-margin)[:16]]])
    adjacency = []
    for i, j in combinations(range(len(uniq)), 2):
        diff = np.flatnonzero(uniq[i] != uniq[j])
        if diff.size == 1:
            adjacency.append((i, j, int(diff[0])))
    return CellComplex(uniq, samples, adjacency)


# -- polyhedron construction --------------------------------------------------------

@dataclass
class PolyhedralFConvex:
    """Vertices X(xi) of the cells, with X(base) = 0, and the induced support function."""

    cell_vertices: dict
    base_cell: object
    edges: list
    samples: dict
    cellulation: object = None
    signs: dict | None = None
    warnings: list = field(default_factory=list)

    @property
    def cells(self) -> list:
        return list(self.cell_vertices)

    @property
    def spec(self) -> PolyhedralMax:
        return PolyhedralMax(np.array([self.cell_vertices[c] for c in self.cells]))

    @property
    def dim(self) -> int:
        return len(next(iter(self.cell_vertices.values()))) - 1

    def vertex_array(self) -> np.ndarray:
        return np.array([self.cell_vertices[c] for c in self.cells])

    def neighbours(self):
        nb = {c: [] for c in self.cell_vertices}
        for a, b, lam, v in self.edges:
            nb[a].append((b, lam * v))
            nb[b].append((a, -lam * v))
        return nb

    def to_csv(self) -> str:
        d1 = self.dim + 1
        lines = ["cell," + ",".join(f"x{i + 1}" for i in range(d1))]
        for c in self.cells:
            lines.append(f"{c}," + ",".join(f"{x:.17g}" for x in self.cell_vertices[c]))
        return "\n".join(lines) + "\n"


def _tree_vertices(cells, edges, base):
    nb = {c: [] for c in cells}
    for a, b, lam, v in edges:
        nb[a].append((b, lam * v))
        nb[b].append((a, -lam * v))
    X = {base: np.zeros_like(edges[0][3]) if edges else None}
    queue = deque([base])
    while queue:
        c = queue.popleft()
        for nxt, step in nb[c]:
            if nxt not in X:
                X[nxt] = X[c] + step
                queue.append(nxt)
    return X


def build_polyhedron(c, base=None, n_samples: int = 20000, seed: int = 0) -> PolyhedralFConvex:
    """Realize the cells' vertices by summing weighted facet normals along paths from the base cell.

    For an arrangement the vertex of a cell with sign vector s is
    sum over walls separating it from the base of a_i s_i v_i; it is checked
    against the breadth-first path realization.
    """
    closure = check_closure(c)
    if not closure.ok:
        raise ValueError(f"closure condition violated (residual {closure.max_residual:.3e})")
    warnings = []
    if isinstance(c, Arrangement):
        if not c.walls:
            raise ValueError("an empty arrangement needs its dimension: use cone_polyhedron(d)")
        d = c.dim
        cx = enumerate_cells(c, n_samples, seed)
        names = [_sign_name(s) for s in cx.signs]
        if base is None:
            base = names[0]
        if base not in names:
            raise ValueError(f"unknown base cell {base!r}")
        b = names.index(base)
        edges = []
        for i, j, k in cx.adjacency:
            w = c.walls[k]
            # v points into the cell on the positive side of the wall
            if cx.signs[j][k] > 0:
                edges.append((names[i], names[j], w.weight, w.normal))
            else:
                edges.append((names[j], names[i], w.weight, w.normal))
        normals = np.array([w.normal for w in c.walls])
        weights = np.array([w.weight for w in c.walls])
        X = {}
        for name, s in zip(names, cx.signs):
            sep = s != cx.signs[b]
            X[name] = (weights[sep] * s[sep]) @ normals[sep] if sep.any() else np.zeros(d + 1)
        tree = _tree_vertices(names, edges, base)
        dev = max((np.abs(tree[n] - X[n]).max() for n in names if n in tree), default=0.0)
        if dev > 1e-9 or len(tree) != len(names):
            raise ArithmeticError(f"path realization disagrees with the arrangement shortcut ({dev:.3e})")
        if np.any(weights < SMALL_WEIGHT):
            warnings.append("build_polyhedron: weights below 1e-12")
        samples = {n: s for n, s in zip(names, cx.samples)}
        signs = {n: s for n, s in zip(names, cx.signs)}
        return PolyhedralFConvex(X, base, edges, samples, c, signs, warnings)
    if isinstance(c, Explicit):
        if base is None:
            base = c.cells[0]
        edges = [(f.cells[0], f.cells[1], f.weight, f.normal) for f in c.facets]
        if not edges:
            raise ValueError("explicit complex without facets: use cone_polyhedron(d)")
        X = _tree_vertices(list(c.cells), edges, base)
        if len(X) != len(c.cells):
            raise ValueError("explicit complex is not connected")
        samples = {k: np.atleast_2d(v) for k, v in c.samples.items()}
        return PolyhedralFConvex(X, base, edges, samples, c, None, warnings)
    raise TypeError("unknown cellulation type")


def cone_polyhedron(d: int, apex=None) -> PolyhedralFConvex:
    """The single-cell case: the future cone of one point."""
    apex = np.zeros(d + 1) if apex is None else np.asarray(apex, dtype=float)
    e = np.zeros(d + 1)
    e[-1] = 1.0
    return PolyhedralFConvex({"*": apex}, "*", [], {"*": e[None]}, Arrangement(()), {"*": np.zeros(0)})


def _sign_name(s) -> str:
    return "".join("+" if x > 0 else "-" for x in s)


def path_vertex(P: PolyhedralFConvex, path) -> np.ndarray:
    """Vertex obtained by summing facet steps along a path of adjacent cells starting at the base."""
    nb = {c: dict(v) for c, v in P.neighbours().items()}
    if path[0] != P.base_cell:
        raise ValueError("paths start at the base cell")
    X = np.zeros_like(P.cell_vertices[P.base_cell])
    for a, b in zip(path[:-1], path[1:]):
        if b not in nb[a]:
            raise ValueError(f"cells {a!r} and {b!r} are not adjacent")
        X = X + nb[a][b]
    return X


def _shortest_path(nb, start, goal):
    prev = {start: None}
    queue = deque([start])
    while queue:
        c = queue.popleft()
        if c == goal:
            break
        for nxt in nb[c]:
            if nxt not in prev:
                prev[nxt] = c
                queue.append(nxt)
    path = [goal]
    while path[-1] != start:
        path.append(prev[path[-1]])
    return path[::-1]


def verify_path_independence(P: PolyhedralFConvex, n_random_paths: int = 100, seed: int = 0) -> float:
    """Max deviation between random-path realizations and the stored vertices.

    A random path is a random walk of random length from the base cell
    followed by a shortest path to a random target cell.
    """
    rng = np.random.default_rng(seed)
    nb = {c: [b for b, _ in v] for c, v in P.neighbours().items()}
    cells = P.cells
    worst = 0.0
    for _ in range(n_random_paths):
        target = cells[rng.integers(len(cells))]
        path = [P.base_cell]
        for _ in range(rng.integers(0, 3 * len(cells) + 1)):
            if not nb[path[-1]]:
                break
            path.append(nb[path[-1]][rng.integers(len(nb[path[-1]]))])
        path += _shortest_path(nb, path[-1], target)[1:]
        worst = max(worst, float(np.abs(path_vertex(P, path) - P.cell_vertices[target]).max()))
    return worst


@dataclass
class GaussReport:
    ok: bool
    failures: list
    checked: int
    resampled: int


def verify_gauss_decomposition(P: PolyhedralFConvex, samples_per_cell: int = 8, rtol: float = 1e-9) -> GaussReport:
    """For interior samples of each cell, the support function's maximizing vertex is the cell's own."""
    V = P.vertex_array()
    cells = P.cells
    failures, checked, resampled = [], 0, 0
    for k, c in enumerate(cells):
        pts = np.atleast_2d(P.samples.get(c, np.zeros((0, V.shape[1]))))[:samples_per_cell]
        for eta in pts:
            vals = minkowski_form(eta, V)
            top = vals.max()
            ties = np.flatnonzero(vals >= top - rtol * max(1.0, np.abs(vals).max()))
            if ties.size > 1:
                # the sample sits on a facet; the enumeration keeps samples well inside, so count it
                resampled += 1
                continue
            checked += 1
            if ties[0] != k:
                failures.append((c, eta.tolist(), cells[ties[0]]))
    return GaussReport(not failures and checked > 0, failures, checked, resampled)


@dataclass
class S1Report:
    max_deviation: float
    deviations: list


def edge_length(e) -> float:
    """Intrinsic length of a space-like edge vector, sqrt(<e, e>_-)."""
    q = float(minkowski_sq(e))
    if q < -1e-14:
        raise ValueError("edge is not space-like")
    return float(np.sqrt(max(q, 0.0)))


def recompute_s1(P: PolyhedralFConvex) -> S1Report:
    """Edge lengths |X(xi) - X(xi')| of all facets against the prescribed weights."""
    devs = []
    for a, b, lam, v in P.edges:
        devs.append((a, b, lam, edge_length(P.cell_vertices[b] - P.cell_vertices[a]) - lam))
    return S1Report(max((abs(x[3]) for x in devs), default=0.0), devs)


def random_arrangement(rng, n_walls: int, d: int = 2, radius: float = 1.5, weight_range=(0.2, 2.0)) -> Arrangement:
    """Walls through random points within ``radius`` of the origin with random directions."""
    from .lorentz import exp_map, origin, tangent_frame
    walls = []
    while len(walls) < n_walls:
        p = exp_map(origin(d), rng.normal(size=d) * radius / np.sqrt(d))
        n = rng.normal(size=d)
        n /= np.linalg.norm(n)
        v = tangent_frame(p) @ n
        if any(abs(abs(minkowski_form(v, w.normal)) - 1) < 1e-6 for w in walls):
            continue
        walls.append(Wall(v, float(rng.uniform(*weight_range))))
    return Arrangement(tuple(walls))


# -- dimension one -----------------------------------------------------------------

def h1_point(t):
    t = np.asarray(t, dtype=float)
    return np.stack([np.sinh(t), np.cosh(t)], axis=-1)


def h1_normal(t):
    """Unit space-like vector orthogonal to the point t of H^1, positive on larger t."""
    t = np.asarray(t, dtype=float)
    return np.stack([np.cosh(t), np.sinh(t)], axis=-1)


def build_d1(points, weights) -> PolyhedralFConvex:
    """Space-like polygon with vertices X_k = sum_{j<k} a_j v_j (cells are intervals of H^1)."""
    t = np.asarray(points, dtype=float)
    a = np.asarray(weights, dtype=float)
    order = np.argsort(t)
    t, a = t[order], a[order]
    if np.any(a <= 0):
        raise ValueError("weights must be positive")
    if np.any(np.diff(t) <= 0):
        raise ValueError("points must be distinct")
    n = t.size
    V = h1_normal(t)
    X = {0: np.zeros(2)}
    edges, samples = [], {}
    bounds = np.concatenate([[t[0] - 2.0], t, [t[-1] + 2.0]]) if n else np.array([-1.0, 1.0])
    for k in range(1, n + 1):
        X[k] = X[k - 1] + a[k - 1] * V[k - 1]
        edges.append((k - 1, k, float(a[k - 1]), V[k - 1]))
    for k in range(n + 1):
        lo, hi = bounds[k], bounds[k + 1]
        samples[k] = h1_point(lo + (hi - lo) * np.array([0.25, 0.5, 0.75]))
    warnings = ["build_d1: weights below 1e-12"] if np.any(a < SMALL_WEIGHT) else []
    return PolyhedralFConvex(X, 0, edges, samples, ("d1", t, a), None, warnings)


@dataclass
class InvariantBuildResult:
    polyhedron: PolyhedralFConvex
    cocycle: CocycleD1
    coboundary_vector: np.ndarray
    coboundary_residual: float
    invariance_residual: float
    cocycle_report: object


def build_invariant_d1(period: float, points, weights, n_periods: int = 3) -> InvariantBuildResult:
    """Polygon invariant under the boost of parameter ``period`` up to the cocycle it induces.

    The weights (points in [0, period)) are repeated over 2 n_periods + 1
    periods.  tau = X(gamma_0 xi_b) with xi_b the cell preceding the first
    point of period 0; translating by -v, v = (Id - gamma_0)^{-1} tau, makes
    the polygon gamma_0-invariant.
    """
    T = float(period)
    if T == 0:
        raise ValueError("period boost must have t0 != 0")
    if T < 0:
        raise ValueError("give the period as a positive boost parameter")
    t = np.asarray(points, dtype=float)
    a = np.asarray(weights, dtype=float)
    if np.any((t < 0) | (t >= T)):
        raise ValueError("points must lie in [0, period)")
    shifts = np.arange(-n_periods, n_periods + 1)
    all_t = (t[None, :] + T * shifts[:, None]).ravel()
    all_a = np.tile(a, shifts.size)
    P = build_d1(all_t, all_a)
    m = t.size
    # rebase so that the cell just before period 0 is the base cell
    b = n_periods * m
    Xb = P.cell_vertices[b]
    P.cell_vertices = {k: v - Xb for k, v in P.cell_vertices.items()}
    P.base_cell = b
    g = boost_d1(T)
    tau = P.cell_vertices[b + m]
    coc = CocycleD1(g, tau)
    v = coboundary_solve_d1(coc)
    cob_res = float(np.abs(v - g.linear @ v - tau).max())
    # invariance of the translated polygon on the cells away from the truncation
    inv = 0.0
    for k in range(m, (2 * n_periods) * m + 1):
        if k + m in P.cell_vertices:
            lhs = P.cell_vertices[k + m] - v
            rhs = g.linear @ (P.cell_vertices[k] - v)
            inv = max(inv, float(np.abs(lhs - rhs).max()))

    def tau_word(word):
        n = int(sum(np.sign(word)))
        return P.cell_vertices[b + n * m]

    words = [w for L in (1, 2, 3) for w in _words(L)]
    report = cocycle_check([LorentzIsometry(g.linear, tau)], words, tau_word)
    return InvariantBuildResult(P, coc, v, cob_res, inv, report)


def _words(length: int):
    out = [()]
    for _ in range(length):
        out = [w + (s,) for w in out for s in (1, -1)]
    return out
