"""Minkowski space R^{d,1} and the hyperboloid model of H^d.

Points are plain numpy arrays whose last axis holds the d+1 coordinates,
the last coordinate being the time coordinate.  Every function accepts
batches (arrays of shape ``(..., d+1)``) unless stated otherwise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

HPOINT_TOL = 1e-12
ISOMETRY_TOL = 1e-10
SUPPORTED_DIMS = (1, 2, 3)


class CausalClass(enum.Enum):
    FUTURE_TIMELIKE = "future-timelike"
    PAST_TIMELIKE = "past-timelike"
    FUTURE_LIGHTLIKE = "future-lightlike"
    PAST_LIGHTLIKE = "past-lightlike"
    SPACELIKE = "spacelike"
    ZERO = "zero"


def check_dim(d: int) -> int:
    if int(d) != d or d not in SUPPORTED_DIMS:
        raise ValueError(f"dimension d={d} outside the supported range {SUPPORTED_DIMS}")
    return int(d)


def minkowski_form(x, y):
    """<x, y>_- = x_1 y_1 + ... + x_d y_d - x_{d+1} y_{d+1}."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    return np.sum(x[..., :-1] * y[..., :-1], axis=-1) - x[..., -1] * y[..., -1]


def minkowski_sq(x):
    return minkowski_form(x, x)


def gram_J(n: int) -> np.ndarray:
    """The matrix J = diag(1, ..., 1, -1) of size n = d+1."""
    J = np.eye(n)
    J[-1, -1] = -1.0
    return J


def lorentz_norm(x):
    """||x||_- = sqrt(-<x,x>_-) for time-like x (nan otherwise)."""
    q = -minkowski_sq(x)
    with np.errstate(invalid="ignore"):
        return np.where(q > 0, np.sqrt(np.where(q > 0, q, 0.0)), np.nan)


def spacelike_norm(x):
    """sqrt(<x,x>_-) for space-like x: the length inside a space-like hyperplane."""
    return np.sqrt(np.maximum(minkowski_sq(x), 0.0))


def classify(x, tol: float = 1e-10) -> CausalClass:
    """Causal character of a single vector.

    The light-like band is relative: |<x,x>_-| <= tol * |x|_E^2.
    """
    x = np.asarray(x, dtype=float)
    e2 = float(np.dot(x, x))
    if e2 == 0.0:
        return CausalClass.ZERO
    q = float(minkowski_sq(x))
    if abs(q) <= tol * e2:
        return CausalClass.FUTURE_LIGHTLIKE if x[-1] > 0 else CausalClass.PAST_LIGHTLIKE
    if q > 0:
        return CausalClass.SPACELIKE
    return CausalClass.FUTURE_TIMELIKE if x[-1] > 0 else CausalClass.PAST_TIMELIKE


def is_future_timelike(x, tol: float = 1e-10):
    x = np.asarray(x, dtype=float)
    e2 = np.sum(x * x, axis=-1)
    return (minkowski_sq(x) < -tol * e2) & (x[..., -1] > 0)


def hpoint(coords) -> np.ndarray:
    """Validate and return a point of H^d (or a batch of them)."""
    x = np.asarray(coords, dtype=float)
    q = minkowski_sq(x)
    if not (np.all(np.abs(q + 1.0) <= HPOINT_TOL * np.maximum(1.0, np.sum(x * x, axis=-1)))
            and np.all(x[..., -1] > 0)):
        raise ValueError("not a point of the hyperboloid <x,x>_- = -1, x_{d+1} > 0")
    return x


def spacelike_unit(coords) -> np.ndarray:
    v = np.asarray(coords, dtype=float)
    if not np.all(np.abs(minkowski_sq(v) - 1.0) <= HPOINT_TOL * np.maximum(1.0, np.sum(v * v, axis=-1))):
        raise ValueError("not a unit space-like vector")
    return v


def unit_spacelike(v) -> np.ndarray:
    """Rescale a space-like vector to <v,v>_- = 1."""
    v = np.asarray(v, dtype=float)
    q = minkowski_sq(v)
    if np.any(q <= 0):
        raise ValueError("vector is not space-like")
    return v / np.sqrt(q)[..., None]


def origin(d: int) -> np.ndarray:
    """e_{d+1}, the base point of H^d."""
    e = np.zeros(check_dim(d) + 1)
    e[-1] = 1.0
    return e


def hyperbolic_distance(x, y):
    """acosh(-<x,y>_-), with the argument clamped to [1, inf)."""
    return np.arccosh(np.maximum(-minkowski_form(x, y), 1.0))


def normalize_future(x):
    """Central projection of a future time-like vector onto H^d.

    Returns ``(x / ||x||_-, ||x||_-)``.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(is_future_timelike(x)):
        raise ValueError("vector is not future time-like")
    n = lorentz_norm(x)
    return x / np.asarray(n)[..., None], n


def project_to_hyperboloid(x):
    """Cheap re-normalization used to scrub round-off from computed points."""
    x = np.asarray(x, dtype=float)
    return x / lorentz_norm(x)[..., None]


# -- tangent frames and geodesic polar coordinates ---------------------------

def boost_to(p) -> np.ndarray:
    """The pure boost L with L e_{d+1} = p.

    Its first d columns form an orthonormal frame of T_p H^d.  Batched over
    the leading axes of ``p``.
    """
    p = np.asarray(p, dtype=float)
    n = p.shape[-1]
    pb, pt = p[..., :-1], p[..., -1]
    L = np.empty(p.shape[:-1] + (n, n))
    L[..., :-1, :-1] = np.eye(n - 1) + pb[..., :, None] * pb[..., None, :] / (1.0 + pt)[..., None, None]
    L[..., :-1, -1] = pb
    L[..., -1, :-1] = pb
    L[..., -1, -1] = pt
    return L


def tangent_frame(p) -> np.ndarray:
    """Orthonormal frame(s) of T_p H^d as the columns of a (..., d+1, d) array."""
    return boost_to(p)[..., :, :-1]


def exp_map(p, u):
    """Riemannian exponential at p of tangent coordinates u (frame coordinates).

    ``u`` has shape (..., d) and broadcasts against ``p`` of shape (..., d+1).
    """
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    E = tangent_frame(p)
    r = np.linalg.norm(u, axis=-1)
    w = np.einsum("...ij,...j->...i", E, u)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(r > 0, np.sinh(r) / np.where(r > 0, r, 1.0), 1.0)
    return np.cosh(r)[..., None] * p + s[..., None] * w


def log_map(p, x):
    """Inverse of exp_map: frame coordinates of the tangent vector at p pointing to x."""
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    E = tangent_frame(p)
    c = -minkowski_form(p, x)
    rho = np.arccosh(np.maximum(c, 1.0))
    w = x - c[..., None] * p
    wJ = w.copy()
    wJ[..., -1] *= -1.0
    coords = np.einsum("...i,...ij->...j", wJ, E)
    norm = np.linalg.norm(coords, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(norm > 0, rho / np.where(norm > 0, norm, 1.0), 0.0)
    return coords * scale[..., None]


def direction_from_angles(angles, d: int) -> np.ndarray:
    """Unit vector of S^{d-1} from spherical angles.

    d=1: the sign (+1/-1) given as angle 0 or pi; d=2: theta; d=3: (polar, azimuth).
    """
    a = np.asarray(angles, dtype=float)
    if d == 1:
        return np.sign(np.cos(a))[..., None]
    if d == 2:
        return np.stack([np.cos(a), np.sin(a)], axis=-1)
    psi, phi = a[..., 0], a[..., 1]
    return np.stack([np.sin(psi) * np.cos(phi), np.sin(psi) * np.sin(phi), np.cos(psi)], axis=-1)


def polar_to(base, rho, direction):
    """Point at geodesic polar coordinates (rho, Theta) about ``base``.

    ``direction`` is a unit vector of R^d in the frame of ``tangent_frame(base)``;
    in d=2 a scalar angle is accepted as well (use direction_from_angles for batches).
    """
    base = np.asarray(base, dtype=float)
    d = base.shape[-1] - 1
    theta = np.asarray(direction, dtype=float)
    if d == 2 and theta.ndim == 0:
        theta = direction_from_angles(theta, 2)
    rho = np.asarray(rho, dtype=float)
    w = theta @ tangent_frame(base).T
    return np.cosh(rho)[..., None] * base + np.sinh(rho)[..., None] * w


@dataclass(frozen=True)
class PolarCoords:
    rho: float
    direction: np.ndarray
    degenerate: bool = False


def polar_from(base, point) -> PolarCoords:
    """Geodesic polar coordinates of ``point`` about ``base`` (single points).

    At rho = 0 the direction is undefined: the first frame axis is returned and
    the result is flagged ``degenerate``.
    """
    base = np.asarray(base, dtype=float)
    u = log_map(base, point)
    rho = float(np.linalg.norm(u))
    if rho < 1e-14:
        e = np.zeros(base.shape[-1] - 1)
        e[0] = 1.0
        return PolarCoords(0.0, e, True)
    return PolarCoords(rho, u / rho, False)


def random_hpoints(rng, n: int, d: int, radius: float = 2.0, center=None) -> np.ndarray:
    """Points of H^d uniformly distributed in geodesic radius (not in volume)."""
    center = origin(d) if center is None else np.asarray(center, dtype=float)
    dirs = rng.normal(size=(n, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = rng.uniform(0.0, radius, size=n)
    return project_to_hyperboloid(exp_map(center, dirs * r[:, None]))


# -- isometries ----------------------------------------------------------------

@dataclass(frozen=True)
class LorentzIsometry:
    """x -> linear @ x + translation, with linear in the orthochronous Lorentz group."""

    linear: np.ndarray
    translation: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=float)
        n = lin.shape[0]
        if lin.shape != (n, n):
            raise ValueError("linear part must be square")
        J = gram_J(n)
        if not np.allclose(lin.T @ J @ lin, J, atol=ISOMETRY_TOL * max(1.0, np.abs(lin).max() ** 2)):
            raise ValueError("linear part does not preserve the Minkowski form")
        if lin[-1, -1] <= 0:
            raise ValueError("linear part does not preserve the future cone")
        tr = np.zeros(n) if self.translation is None else np.asarray(self.translation, dtype=float)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)

    @property
    def dim(self) -> int:
        return self.linear.shape[0] - 1

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.linear.T + self.translation

    def apply_linear(self, x):
        return np.asarray(x, dtype=float) @ self.linear.T

    def compose(self, other: "LorentzIsometry") -> "LorentzIsometry":
        """self o other."""
        return LorentzIsometry(self.linear @ other.linear,
                               self.linear @ other.translation + self.translation)

    def __matmul__(self, other: "LorentzIsometry") -> "LorentzIsometry":
        return self.compose(other)

    def inverse(self) -> "LorentzIsometry":
        inv = np.linalg.inv(self.linear)
        return LorentzIsometry(inv, -inv @ self.translation)

    def power(self, n: int) -> "LorentzIsometry":
        result = identity(self.dim)
        g = self if n >= 0 else self.inverse()
        for _ in range(abs(n)):
            result = result @ g
        return result

    @classmethod
    def from_boost_to(cls, p) -> "LorentzIsometry":
        return cls(boost_to(p))


def identity(d: int) -> LorentzIsometry:
    return LorentzIsometry(np.eye(d + 1))


def boost_d1(t: float) -> LorentzIsometry:
    """The boost [[cosh t, sinh t], [sinh t, cosh t]] of R^{1,1}."""
    c, s = np.cosh(t), np.sinh(t)
    return LorentzIsometry(np.array([[c, s], [s, c]]))


def boost_parameter_d1(g: LorentzIsometry) -> float:
    """Recover t from a pure d=1 boost (raises if g is not one)."""
    lin = g.linear
    if lin.shape != (2, 2) or not np.allclose(lin, lin.T, atol=1e-10) or not np.isclose(lin[0, 0], lin[1, 1]):
        raise ValueError("not a pure boost of R^{1,1}")
    return float(np.arcsinh(lin[0, 1]))


def random_isometry(rng, d: int, scale: float = 1.0) -> LorentzIsometry:
    """A boost composed with a rotation of the space-like coordinates."""
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    R = np.eye(d + 1)
    R[:d, :d] = q
    p = exp_map(origin(d), rng.normal(size=d) * scale)
    return LorentzIsometry(boost_to(project_to_hyperboloid(p)) @ R)


# -- cocycles in dimension one -------------------------------------------------

@dataclass(frozen=True)
class CocycleD1:
    """A cocycle on the cyclic group generated by a d=1 boost, given by tau_{gamma_0}."""

    generator: LorentzIsometry
    tau: np.ndarray

    def __post_init__(self):
        t = boost_parameter_d1(self.generator)
        if t == 0:
            raise ValueError("generator must be a boost with t != 0")
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float))

    @property
    def t(self) -> float:
        return boost_parameter_d1(self.generator)

    def affine_generator(self) -> LorentzIsometry:
        return LorentzIsometry(self.generator.linear, self.tau)

    def tau_of_power(self, n: int) -> np.ndarray:
        """Translation part of gamma^n, from composing the affine generator."""
        return self.affine_generator().power(n).translation


def coboundary_solve_d1(c: CocycleD1, check: bool = True) -> np.ndarray:
    """v = (Id - gamma_0)^{-1} tau, so that tau = v - gamma_0 v."""
    g = c.generator.linear
    v = np.linalg.solve(np.eye(2) - g, c.tau)
    if check:
        res = np.max(np.abs(v - g @ v - c.tau))
        if res > 1e-10 * max(1.0, np.abs(c.tau).max()):
            raise ArithmeticError(f"coboundary residual {res:.3e}")
    return v


def coboundary(v, generator: LorentzIsometry) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v - generator.linear @ v


@dataclass(frozen=True)
class CocycleCheck:
    ok: bool
    failing_word: tuple | None = None
    residual: float = 0.0


def cocycle_check(generators: Sequence[LorentzIsometry], words: Sequence[Sequence[int]],
                  tau: Callable[[tuple], np.ndarray] | None = None,
                  tol: float = 1e-9) -> CocycleCheck:
    """Check tau_{g mu} = tau_g + g_0 tau_mu along composition words.

    A word is a sequence of signed generator indices (1-based; -k is the
    inverse of generator k).  ``tau(word)`` gives the translation part assigned
    to the group element spelled by the word; by default it is read off the
    composite of the affine generators.  Every split of every word into a
    prefix and a suffix is tested.
    """
    def word_iso(word):
        g = identity(generators[0].dim)
        for k in word:
            gk = generators[abs(k) - 1]
            g = g @ (gk if k > 0 else gk.inverse())
        return g

    if tau is None:
        def tau(word):
            return word_iso(word).translation

    worst = 0.0
    for word in words:
        word = tuple(word)
        total = np.asarray(tau(word), dtype=float)
        for split in range(1, len(word)):
            prefix, suffix = word[:split], word[split:]
            pred = np.asarray(tau(prefix)) + word_iso(prefix).linear @ np.asarray(tau(suffix))
            res = float(np.max(np.abs(total - pred)))
            scale = max(1.0, float(np.abs(total).max()))
            worst = max(worst, res / scale)
            if res > tol * scale:
                return CocycleCheck(False, word, res)
    return CocycleCheck(True, None, worst)
