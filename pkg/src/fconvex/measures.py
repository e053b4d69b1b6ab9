"""Measures on H^d: atoms, weighted totally geodesic walls, and smooth bump densities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .lorentz import check_dim, hpoint, hyperbolic_distance, spacelike_unit

SPHERE_AREA = {0: 2.0, 1: 2.0 * np.pi, 2: 4.0 * np.pi}


def sphere_area(k: int) -> float:
    """Area v_k of the unit k-sphere (k = 0, 1, 2)."""
    return SPHERE_AREA[k]


# -- radial profiles on [0, 1] (s = rho / radius) ------------------------------

def _poly3(s):
    q = 1.0 - s * s
    inside = s < 1.0
    f = np.where(inside, q ** 3, 0.0)
    df = np.where(inside, -6.0 * s * q ** 2, 0.0)
    d2f = np.where(inside, -6.0 * q ** 2 + 24.0 * s * s * q, 0.0)
    return f, df, d2f


def _smooth(s):
    inside = s < 1.0
    q = np.where(inside, 1.0 - s * s, 1.0)
    f = np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)
    a = -2.0 * s / q ** 2
    df = f * a
    d2f = f * (a * a - 2.0 / q ** 2 - 8.0 * s * s / q ** 3)
    return f, np.where(inside, df, 0.0), np.where(inside, d2f, 0.0)


def _constant(s):
    f = np.where(s < 1.0, 1.0, 0.0)
    return f, np.zeros_like(f), np.zeros_like(f)


PROFILES = {"poly3": _poly3, "smooth": _smooth, "constant": _constant}


@dataclass(frozen=True, eq=False)
class Bump:
    """amplitude * profile(dist(., center) / radius), supported in the closed ball."""

    center: np.ndarray
    radius: float
    amplitude: float = 1.0
    profile: str = "poly3"

    def __post_init__(self):
        object.__setattr__(self, "center", hpoint(self.center))
        if not self.radius > 0:
            raise ValueError("bump radius must be positive")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown bump profile {self.profile!r}")

    @property
    def dim(self) -> int:
        return self.center.shape[-1] - 1

    def radial(self, rho):
        """f, f', f'' as functions of the distance rho to the center."""
        s = np.asarray(rho, dtype=float) / self.radius
        f, df, d2f = PROFILES[self.profile](s)
        a = self.amplitude
        return a * f, a * df / self.radius, a * d2f / self.radius ** 2

    def __call__(self, points):
        return self.radial(hyperbolic_distance(points, self.center))[0]

    def laplacian(self, points):
        rho = hyperbolic_distance(points, self.center)
        _, df, d2f = self.radial(rho)
        d = self.dim
        # (d-1) coth(rho) f'(rho) -> (d-1) f''(0) at the center
        with np.errstate(invalid="ignore", divide="ignore"):
            drift = np.where(rho > 1e-8, df / np.tanh(np.maximum(rho, 1e-300)), self.radial(0.0)[2])
        return d2f + (d - 1) * drift

    def integral(self) -> float:
        d = self.dim
        val, _ = quad(lambda r: self.radial(r)[0] * np.sinh(r) ** (d - 1), 0.0, self.radius,
                      epsabs=1e-14, epsrel=1e-13, limit=200)
        return sphere_area(d - 1) * val

    def to_dict(self):
        return {"center": self.center.tolist(), "radius": self.radius, "amplitude": self.amplitude,
                "profile": self.profile}


@dataclass(frozen=True)
class Density:
    """A finite sum of bumps."""

    bumps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "bumps", tuple(self.bumps))

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        return sum((b(points) for b in self.bumps), np.zeros(points.shape[:-1]))

    def laplacian(self, points):
        points = np.asarray(points, dtype=float)
        return sum((b.laplacian(points) for b in self.bumps), np.zeros(points.shape[:-1]))

    def integral(self) -> float:
        return float(sum(b.integral() for b in self.bumps))

    def scaled(self, lam: float) -> "Density":
        return Density(tuple(Bump(b.center, b.radius, lam * b.amplitude, b.profile) for b in self.bumps))

    def to_dict(self):
        return {"bumps": [b.to_dict() for b in self.bumps]}


@dataclass(frozen=True, eq=False)
class Atom:
    point: np.ndarray
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "point", hpoint(self.point))
        if not self.weight > 0:
            raise ValueError("atom weights must be positive")


@dataclass(frozen=True, eq=False)
class Wall:
    """The totally geodesic hypersurface <x, normal>_- = 0 carrying weight a.

    A wall of weight a is the measure (a/d) times the (d-1)-dimensional
    hyperbolic area on the hypersurface: the first area measure of a polyhedral
    set whose facet dual to the wall is an edge of length a.
    """

    normal: np.ndarray
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "normal", spacelike_unit(self.normal))
        if not self.weight > 0:
            raise ValueError("wall weights must be positive")


@dataclass(frozen=True)
class MeasureSpec:
    dim: int
    atoms: tuple = ()
    walls: tuple = ()
    density: Density | None = None

    def __post_init__(self):
        check_dim(self.dim)
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "walls", tuple(self.walls))
        n = self.dim + 1
        for a in self.atoms:
            if a.point.shape != (n,):
                raise ValueError("atom dimension mismatch")
        for w in self.walls:
            if w.normal.shape != (n,):
                raise ValueError("wall dimension mismatch")
        if self.density is not None:
            for b in self.density.bumps:
                if b.center.shape != (n,):
                    raise ValueError("density dimension mismatch")

    def __add__(self, other: "MeasureSpec") -> "MeasureSpec":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        dens = None
        bumps = ()
        for m in (self, other):
            if m.density is not None:
                bumps = bumps + m.density.bumps
        if bumps:
            dens = Density(bumps)
        return MeasureSpec(self.dim, self.atoms + other.atoms, self.walls + other.walls, dens)

    def scaled(self, lam: float) -> "MeasureSpec":
        if not lam > 0:
            raise ValueError("scale must be positive")
        return MeasureSpec(self.dim, tuple(Atom(a.point, lam * a.weight) for a in self.atoms),
                           tuple(Wall(w.normal, lam * w.weight) for w in self.walls),
                           None if self.density is None else self.density.scaled(lam))

    def to_dict(self):
        out = {"dim": self.dim,
               "atoms": [{"point": a.point.tolist(), "weight": a.weight} for a in self.atoms],
               "walls": [{"normal": w.normal.tolist(), "weight": w.weight} for w in self.walls]}
        if self.density is not None:
            out["density"] = self.density.to_dict()
        return out


def bump_from_dict(data: dict) -> Bump:
    return Bump(np.asarray(data["center"], dtype=float), float(data["radius"]),
                float(data.get("amplitude", 1.0)), data.get("profile", "poly3"))


def density_from_dict(data) -> Density:
    items = data["bumps"] if isinstance(data, dict) and "bumps" in data else data
    if isinstance(items, dict):
        items = [items]
    return Density(tuple(bump_from_dict(b) for b in items))


def measure_from_dict(data: dict) -> MeasureSpec:
    d = int(data["dim"])
    atoms = tuple(Atom(np.asarray(a["point"], dtype=float), float(a["weight"])) for a in data.get("atoms", []))
    walls = tuple(Wall(np.asarray(w["normal"], dtype=float), float(w["weight"])) for w in data.get("walls", []))
    dens = data.get("density")
    return MeasureSpec(d, atoms, walls, None if dens is None else density_from_dict(dens))


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretization of the polar kernel integrals.

    ``rho_max`` is an optional cap on the radial range (None: exact support
    bounds); ``n_radial`` Gauss-Legendre nodes per radial segment mapped by a
    graded smoothstep; ``n_angular`` nodes per angular variable.
    """

    rho_max: float | None = None
    n_radial: int = 96
    grading: float = 2.0
    n_angular: int = 64

    def __post_init__(self):
        if self.rho_max is not None and not self.rho_max > 0:
            raise ValueError("rho_max must be positive")
        if self.n_radial < 8 or self.n_angular < 8:
            raise ValueError("node counts must be at least 8")


def quadrature_from_dict(data: dict | None) -> QuadratureSpec:
    data = data or {}
    return QuadratureSpec(data.get("rho_max"), int(data.get("n_radial", 96)), float(data.get("grading", 2.0)),
                          int(data.get("n_angular", 64)))
