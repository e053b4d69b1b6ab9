"""Support-function descriptions and their first/second order data.

A :class:`SupportSpec` describes a function on H^d through its positively
1-homogeneous extension ``H`` to the future cone.  Every variant evaluates
``H`` on batches; variants with closed-form derivatives also provide the
normal representation (``chi``) and the reverse second fundamental form
(``reverse_II``) in the frame ``tangent_frame(eta)``.  Variants without them
return ``None`` and the geometry layer falls back to finite differences.
"""

from __future__ import annotations

import abc
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy as sp
from scipy.interpolate import CubicSpline

from ..fields import SolutionField
from ..lorentz import (gram_J, is_future_timelike, lorentz_norm, minkowski_form, minkowski_sq,
                       tangent_frame)


class NonDifferentiableError(ValueError):
    """Raised at points where a support function has no gradient.

    ``tie_sets`` maps the index of each offending query point to the indices
    of the vertices achieving the maximum (the face with that normal).
    """

    def __init__(self, message, tie_sets=None):
        super().__init__(message)
        self.tie_sets = tie_sets or {}


def _as_points(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise ValueError("expected points with a coordinate axis")
    return x


def _hess_from_euclidean(hess, eta):
    E = tangent_frame(eta)
    return np.einsum("...ki,...kl,...lj->...ij", E, hess, E)


class SupportSpec(abc.ABC):
    """Base class of the support-function algebra."""

    tag: str = ""

    @abc.abstractmethod
    def H(self, x):
        """1-homogeneous extension evaluated at future time-like vectors."""

    def h(self, eta):
        return self.H(eta)

    def chi(self, eta):
        """Normal representation grad H at points of H^d, or None if unavailable."""
        return None

    def reverse_II(self, eta):
        """(nabla^2 h - h g) in tangent_frame(eta), or None if unavailable."""
        return None

    def contains(self, eta):
        """Mask of points where the description is defined."""
        eta = _as_points(eta)
        return np.ones(eta.shape[:-1], dtype=bool)

    @property
    def dim(self) -> int | None:
        """Dimension d if the description fixes it, else None."""
        return None

    @abc.abstractmethod
    def to_dict(self) -> dict:
        ...

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def __add__(self, other: "SupportSpec") -> "SupportSpec":
        return Sum((self, other))

    def __mul__(self, lam: float) -> "SupportSpec":
        return Scale(float(lam), self)

    __rmul__ = __mul__

    def __neg__(self) -> "SupportSpec":
        return Negate(self)

    def __sub__(self, other: "SupportSpec") -> "SupportSpec":
        return Sum((self, Negate(other)))


@dataclass(frozen=True)
class Constant(SupportSpec):
    """h = c; for c = -t < 0 this is the support function of B_t."""

    c: float
    tag = "constant"

    def H(self, x):
        return self.c * lorentz_norm(_as_points(x))

    def h(self, eta):
        return np.full(_as_points(eta).shape[:-1], float(self.c))

    def chi(self, eta):
        return -self.c * _as_points(eta)

    def reverse_II(self, eta):
        eta = _as_points(eta)
        d = eta.shape[-1] - 1
        return np.broadcast_to(-self.c * np.eye(d), eta.shape[:-1] + (d, d)).copy()

    def to_dict(self):
        return {"type": self.tag, "c": self.c}


@dataclass(frozen=True, eq=False)
class ConeApex(SupportSpec):
    """h = <p, eta>_-: the future cone of the point p."""

    p: np.ndarray
    tag = "cone_apex"

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))

    @property
    def dim(self):
        return self.p.shape[-1] - 1

    def H(self, x):
        return minkowski_form(_as_points(x), self.p)

    def chi(self, eta):
        eta = _as_points(eta)
        return np.broadcast_to(self.p, eta.shape).copy()

    def reverse_II(self, eta):
        eta = _as_points(eta)
        d = eta.shape[-1] - 1
        return np.zeros(eta.shape[:-1] + (d, d))

    def to_dict(self):
        return {"type": self.tag, "p": self.p.tolist()}


@dataclass(frozen=True, eq=False)
class PowerCosh(SupportSpec):
    """h = sign * cosh(rho)^alpha, rho the distance to ``axis``.

    Convex for alpha >= 1 with sign +1 and for -1 <= alpha <= 1 with sign -1;
    other parameters give hedgehogs.
    """

    alpha: float
    sign: int
    axis: np.ndarray
    tag = "power_cosh"

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float))

    @property
    def dim(self):
        return self.axis.shape[-1] - 1

    @property
    def admissible(self) -> bool:
        return (self.sign == 1 and self.alpha >= 1) or (self.sign == -1 and -1 <= self.alpha <= 1)

    def H(self, x):
        x = _as_points(x)
        f = -minkowski_form(self.axis, x)
        n = lorentz_norm(x)
        return self.sign * f ** self.alpha * n ** (1.0 - self.alpha)

    def h(self, eta):
        # ||eta|| = 1 on H^d; skipping it avoids cancellation far from the origin
        return self.sign * (-minkowski_form(self.axis, _as_points(eta))) ** self.alpha

    def _derivs(self, x):
        x = _as_points(x)
        J = gram_J(x.shape[-1])
        a = self.alpha
        f = -minkowski_form(self.axis, x)
        n = lorentz_norm(x)
        gf = np.broadcast_to(-(J @ self.axis), x.shape)
        gn = -(x @ J) / n[..., None]
        return f, n, gf, gn, J, a

    def chi(self, eta):
        f, n, gf, gn, J, a = self._derivs(eta)
        g = a * (f ** (a - 1) * n ** (1 - a))[..., None] * gf + (1 - a) * (f ** a * n ** (-a))[..., None] * gn
        return self.sign * (g @ J)

    def reverse_II(self, eta):
        f, n, gf, gn, J, a = self._derivs(eta)
        outer = lambda u, v: u[..., :, None] * v[..., None, :]
        hess_n = -J / n[..., None, None] - outer(gn, gn) / n[..., None, None]
        hess = (a * (a - 1) * (f ** (a - 2) * n ** (1 - a))[..., None, None] * outer(gf, gf)
                + a * (1 - a) * (f ** (a - 1) * n ** (-a))[..., None, None] * (outer(gf, gn) + outer(gn, gf))
                - a * (1 - a) * (f ** a * n ** (-a - 1))[..., None, None] * outer(gn, gn)
                + (1 - a) * (f ** a * n ** (-a))[..., None, None] * hess_n)
        return self.sign * _hess_from_euclidean(hess, eta)

    def to_dict(self):
        return {"type": self.tag, "alpha": self.alpha, "sign": "+" if self.sign > 0 else "-",
                "axis": self.axis.tolist()}


TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class PolyhedralMax(SupportSpec):
    """H(eta) = max_i <eta, p_i>_-: the future of the convex hull of the p_i."""

    vertices: np.ndarray
    tag = "polyhedral_max"

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.shape[0] == 0:
            raise ValueError("vertex list must be nonempty")
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self):
        return self.vertices.shape[1] - 1

    def acausal(self, tol: float = 1e-12) -> bool:
        v = self.vertices
        for i in range(len(v)):
            for j in range(i + 1, len(v)):
                if minkowski_sq(v[i] - v[j]) <= tol:
                    return False
        return True

    def values(self, x):
        x = _as_points(x)
        return minkowski_form(x[..., None, :], self.vertices)

    def H(self, x):
        return self.values(x).max(axis=-1)

    def tie_sets(self, eta, rtol: float = TIE_RTOL):
        """Vertex indices achieving the max within a relative tolerance (the face)."""
        vals = self.values(eta)
        top = vals.max(axis=-1, keepdims=True)
        scale = np.maximum(1.0, np.abs(vals).max(axis=-1, keepdims=True))
        return vals >= top - rtol * scale

    def chi(self, eta):
        eta = _as_points(eta)
        ties = self.tie_sets(eta)
        count = ties.sum(axis=-1)
        if np.any(count > 1):
            flat = ties.reshape(-1, ties.shape[-1])
            bad = {int(i): tuple(np.flatnonzero(flat[i]).tolist()) for i in np.flatnonzero(count.ravel() > 1)}
            raise NonDifferentiableError("support function not differentiable at a face normal", bad)
        return self.vertices[self.values(eta).argmax(axis=-1)]

    def reverse_II(self, eta):
        self.chi(eta)
        eta = _as_points(eta)
        d = eta.shape[-1] - 1
        return np.zeros(eta.shape[:-1] + (d, d))

    def to_dict(self):
        return {"type": self.tag, "vertices": self.vertices.tolist()}


@dataclass(frozen=True)
class Sum(SupportSpec):
    terms: tuple
    tag = "sum"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("empty sum")

    @property
    def dim(self):
        for t in self.terms:
            if t.dim is not None:
                return t.dim
        return None

    def H(self, x):
        return sum(t.H(x) for t in self.terms)

    def h(self, eta):
        return sum(t.h(eta) for t in self.terms)

    def chi(self, eta):
        parts = [t.chi(eta) for t in self.terms]
        return None if any(p is None for p in parts) else sum(parts)

    def reverse_II(self, eta):
        parts = [t.reverse_II(eta) for t in self.terms]
        return None if any(p is None for p in parts) else sum(parts)

    def contains(self, eta):
        m = self.terms[0].contains(eta)
        for t in self.terms[1:]:
            m = m & t.contains(eta)
        return m

    def to_dict(self):
        return {"type": self.tag, "terms": [t.to_dict() for t in self.terms]}


@dataclass(frozen=True)
class Scale(SupportSpec):
    factor: float
    spec: SupportSpec
    tag = "scale"

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("scale factor must be strictly positive")

    @property
    def dim(self):
        return self.spec.dim

    def H(self, x):
        return self.factor * self.spec.H(x)

    def h(self, eta):
        return self.factor * self.spec.h(eta)

    def chi(self, eta):
        c = self.spec.chi(eta)
        return None if c is None else self.factor * c

    def reverse_II(self, eta):
        r = self.spec.reverse_II(eta)
        return None if r is None else self.factor * r

    def contains(self, eta):
        return self.spec.contains(eta)

    def to_dict(self):
        return {"type": self.tag, "factor": self.factor, "spec": self.spec.to_dict()}


@dataclass(frozen=True)
class Negate(SupportSpec):
    """-h: closes the algebra under differences (hedgehogs)."""

    spec: SupportSpec
    tag = "negate"

    @property
    def dim(self):
        return self.spec.dim

    def H(self, x):
        return -self.spec.H(x)

    def h(self, eta):
        return -self.spec.h(eta)

    def chi(self, eta):
        c = self.spec.chi(eta)
        return None if c is None else -c

    def reverse_II(self, eta):
        r = self.spec.reverse_II(eta)
        return None if r is None else -r

    def contains(self, eta):
        return self.spec.contains(eta)

    def to_dict(self):
        return {"type": self.tag, "spec": self.spec.to_dict()}


@dataclass(frozen=True, eq=False)
class Tabulated(SupportSpec):
    """Interpolated values of a :class:`SolutionField`; derivatives by finite differences."""

    field: SolutionField
    tag = "tabulated"

    @property
    def dim(self):
        return self.field.dim

    def H(self, x):
        x = _as_points(x)
        n = lorentz_norm(x)
        return n * self.field(x / n[..., None])

    def contains(self, eta):
        return self.field.contains(eta)

    def to_dict(self):
        return {"type": self.tag, "field": self.field.to_dict()}


@dataclass(frozen=True, eq=False)
class RadialProfile(SupportSpec):
    """h = f(rho), rho the distance to ``center``, with f tabulated on a grid.

    The profile carries an increasing non-negative function ``g`` (and its
    derivative) such that f' = tanh(rho) (f + g) and f'' = f + g + tanh(rho) g'.
    Then the reverse second fundamental form has eigenvalue g in the sphere
    directions and g + tanh(rho) g' in the radial direction.
    """

    center: np.ndarray
    rho: np.ndarray
    f: np.ndarray
    g: np.ndarray
    g_prime: np.ndarray
    tag = "radial_profile"

    def __post_init__(self):
        for name in ("center", "rho", "f", "g", "g_prime"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @cached_property
    def _f_spline(self):
        return CubicSpline(self.rho, self.f)

    @property
    def dim(self):
        return self.center.shape[-1] - 1

    def _radius(self, eta):
        return np.arccosh(np.maximum(-minkowski_form(self.center, eta), 1.0))

    def _profile(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r > self.rho[-1] * (1 + 1e-12)):
            raise ValueError("radial profile queried beyond its tabulated radius")
        r = np.minimum(r, self.rho[-1])
        return (self._f_spline(r), np.interp(r, self.rho, self.g), np.interp(r, self.rho, self.g_prime))

    def contains(self, eta):
        return self._radius(_as_points(eta)) <= self.rho[-1]

    def H(self, x):
        x = _as_points(x)
        n = lorentz_norm(x)
        return n * self._profile(self._radius(x / n[..., None]))[0]

    def _radial_unit(self, eta, r):
        with np.errstate(invalid="ignore", divide="ignore"):
            u = (np.cosh(r)[..., None] * eta - self.center) / np.sinh(r)[..., None]
        return np.where((r > 1e-12)[..., None], u, 0.0)

    def chi(self, eta):
        eta = _as_points(eta)
        r = self._radius(eta)
        f, g, _ = self._profile(r)
        fp = np.tanh(r) * (f + g)
        return fp[..., None] * self._radial_unit(eta, r) - f[..., None] * eta

    def reverse_II(self, eta):
        eta = _as_points(eta)
        d = eta.shape[-1] - 1
        r = self._radius(eta)
        _, g, gp = self._profile(r)
        u = self._radial_unit(eta, r)
        E = tangent_frame(eta)
        uJ = u.copy()
        uJ[..., -1] *= -1.0
        uc = np.einsum("...i,...ij->...j", uJ, E)
        radial = np.tanh(r) * gp
        return (g[..., None, None] * np.eye(d)
                + radial[..., None, None] * uc[..., :, None] * uc[..., None, :])

    def to_dict(self):
        return {"type": self.tag, "center": self.center.tolist(), "rho": self.rho.tolist(),
                "f": self.f.tolist(), "g": self.g.tolist(), "g_prime": self.g_prime.tolist()}


# -- closed forms -----------------------------------------------------------------

def _sym_norm(xs):
    return sp.sqrt(xs[-1] ** 2 - sum(x ** 2 for x in xs[:-1]))


def _sym_form(xs, v):
    return sum(x * vi for x, vi in zip(xs[:-1], v[:-1])) - xs[-1] * v[-1]


def _cf_edge_profile(xs, params):
    # H = c (<x,v> arctan(||x||/<x,v>) - ||x||): restriction u arctan(1/u) - 1, u = <eta, v>
    v = [sp.nsimplify(c) if float(c).is_integer() else sp.Float(c) for c in params["v"]]
    s = _sym_form(xs, v)
    n = _sym_norm(xs)
    return sp.Float(params.get("scale", 1.0)) * (s * sp.atan(n / s) - n)


def _cf_dual_ball_cone(xs, params):
    # <x,x>_- / (-2 <e_{d+1}, x>_-) = <x,x>_- / (2 x_{d+1})
    q = sum(x ** 2 for x in xs[:-1]) - xs[-1] ** 2
    return q / (2 * xs[-1])


CLOSED_FORMS = {
    "edge_profile": (_cf_edge_profile, "<eta,v> != 0"),
    "dual_ball_cone": (_cf_dual_ball_cone, "everywhere"),
}


@dataclass(frozen=True, eq=False)
class ClosedForm(SupportSpec):
    """A named analytic extended support function from :data:`CLOSED_FORMS`.

    ``edge_profile`` (params ``v``, ``scale``): scale * (u arctan(1/u) - 1),
    u = <eta, v>_-; with scale = a/pi this is the solution of the elementary
    example for a wall of weight a, with scale = 1 the zero mean radius
    surface.  ``dual_ball_cone`` (param ``dim``): <x,x>_-/(-2<e_{d+1},x>_-).
    """

    name: str
    params: dict = field(default_factory=dict)
    tag = "closed_form"

    def __post_init__(self):
        if self.name not in CLOSED_FORMS:
            raise ValueError(f"unknown closed form {self.name!r}")

    @property
    def dim(self):
        if "v" in self.params:
            return len(self.params["v"]) - 1
        return int(self.params["dim"])

    @cached_property
    def _compiled(self):
        n = self.dim + 1
        xs = sp.symbols(f"x0:{n}", real=True)
        expr = CLOSED_FORMS[self.name][0](xs, self.params)
        grad = [sp.diff(expr, x) for x in xs]
        hess = [[sp.diff(g, x) for x in xs] for g in grad]
        return (sp.lambdify(xs, expr, "numpy"), sp.lambdify(xs, grad, "numpy"),
                sp.lambdify(xs, hess, "numpy"))

    def _call(self, fn, x):
        x = _as_points(x)
        out = fn(*np.moveaxis(x, -1, 0))
        return out

    def contains(self, eta):
        eta = _as_points(eta)
        if self.name == "edge_profile":
            return minkowski_form(eta, np.asarray(self.params["v"], dtype=float)) != 0
        return np.ones(eta.shape[:-1], dtype=bool)

    def H(self, x):
        x = _as_points(x)
        return np.broadcast_to(np.asarray(self._call(self._compiled[0], x), dtype=float), x.shape[:-1]).copy()

    def chi(self, eta):
        eta = _as_points(eta)
        g = self._call(self._compiled[1], eta)
        g = np.stack([np.broadcast_to(np.asarray(c, dtype=float), eta.shape[:-1]) for c in g], axis=-1)
        g[..., -1] *= -1.0
        return g

    def reverse_II(self, eta):
        eta = _as_points(eta)
        rows = self._call(self._compiled[2], eta)
        hess = np.stack([np.stack([np.broadcast_to(np.asarray(c, dtype=float), eta.shape[:-1]) for c in row],
                                  axis=-1) for row in rows], axis=-2)
        return _hess_from_euclidean(hess, eta)

    def to_dict(self):
        return {"type": self.tag, "name": self.name, "params": dict(self.params)}


# -- constructors and (de)serialization -------------------------------------------

def elementary_profile(a: float, v) -> ClosedForm:
    """(a/pi)[u arctan(1/u) - 1], u = <eta, v>_-."""
    return ClosedForm("edge_profile", {"v": list(map(float, v)), "scale": float(a) / np.pi})


def zero_mean_radius_profile(v) -> ClosedForm:
    return ClosedForm("edge_profile", {"v": list(map(float, v)), "scale": 1.0})


def ball(t: float) -> Constant:
    """Support function of B_t."""
    return Constant(-float(t))


def from_dict(data: dict) -> SupportSpec:
    kind = data["type"]
    if kind == "constant":
        return Constant(float(data["c"]))
    if kind == "ball":
        return ball(float(data["t"]))
    if kind == "cone_apex":
        return ConeApex(np.asarray(data["p"], dtype=float))
    if kind == "power_cosh":
        sign = data.get("sign", "+")
        sign = 1 if sign in ("+", 1, "+1") else -1
        return PowerCosh(float(data["alpha"]), sign, np.asarray(data["axis"], dtype=float))
    if kind == "polyhedral_max":
        return PolyhedralMax(np.asarray(data["vertices"], dtype=float))
    if kind == "sum":
        return Sum(tuple(from_dict(t) for t in data["terms"]))
    if kind == "scale":
        return Scale(float(data["factor"]), from_dict(data["spec"]))
    if kind == "negate":
        return Negate(from_dict(data["spec"]))
    if kind == "tabulated":
        return Tabulated(SolutionField.from_dict(data["field"]))
    if kind == "radial_profile":
        return RadialProfile(*(np.asarray(data[k]) for k in ("center", "rho", "f", "g", "g_prime")))
    if kind == "closed_form":
        return ClosedForm(data["name"], dict(data.get("params", {})))
    raise ValueError(f"unknown support spec type {kind!r}")


def from_json(text: str) -> SupportSpec:
    return from_dict(json.loads(text))


def check_future(x):
    x = _as_points(x)
    if not np.all(is_future_timelike(x)):
        raise ValueError("extended support functions are evaluated at future time-like vectors")
    return x
