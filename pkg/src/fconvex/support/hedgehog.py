"""Writing a C^2 function on a ball of H^d as a difference of two convex support functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from ..lorentz import direction_from_angles, origin, polar_to
from .geometry import curvature
from .spec import Negate, RadialProfile, SupportSpec, Sum

SMOOTHING_NODES = 1001


@dataclass
class HedgehogDecomposition:
    h1: SupportSpec
    h2: SupportSpec
    h_star: np.ndarray
    rho_star: np.ndarray


def _sphere_directions(d: int, n: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        return direction_from_angles(np.arange(n) * (2 * np.pi / n), 2)
    k = np.arange(n) + 0.5
    z = 1 - 2 * k / n
    phi = np.pi * (3 - np.sqrt(5)) * k
    s = np.sqrt(1 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)


def sphere_max_eigenvalue(h: SupportSpec, rho, center=None, n_dirs: int = 256) -> np.ndarray:
    """Largest eigenvalue of the reverse second fundamental form over each rho-sphere about center."""
    rho = np.asarray(rho, dtype=float)
    d = h.dim
    center = origin(d) if center is None else np.asarray(center, dtype=float)
    dirs = _sphere_directions(d, n_dirs)
    pts = polar_to(center, rho[:, None], dirs[None])
    return curvature(h, pts).radii[..., -1].max(axis=1)


def double_average(rho, g_nodes, g_values, nodes: int = SMOOTHING_NODES):
    """h~(rho) = int_rho^{rho+1} int_t^{t+1} g(s) ds dt for a nondecreasing step function g.

    ``g`` takes the value g_values[i] on [g_nodes[i], g_nodes[i+1]) and is
    constant beyond the last node.  The inner integral is exact (g is piecewise
    constant); the outer one uses Simpson's rule with ``nodes`` points.
    Returns h~ and its derivative G(rho+1) - G(rho), G the inner integral.
    """
    rho = np.asarray(rho, dtype=float)
    knots = np.asarray(g_nodes, dtype=float)
    vals = np.asarray(g_values, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(vals[:-1] * np.diff(knots))])

    def primitive(s):
        i = np.clip(np.searchsorted(knots, s, side="right") - 1, 0, knots.size - 1)
        return cum[i] + vals[i] * (s - knots[i])

    def inner(t):
        return primitive(t + 1.0) - primitive(t)

    u = np.linspace(0.0, 1.0, nodes)
    outer = simpson(inner(rho[:, None] + u[None, :]), x=u, axis=1)
    return outer, inner(rho + 1.0) - inner(rho)


def decompose_hedgehog(h: SupportSpec, radius: float, center=None, n_rho: int = 121,
                       n_dirs: int = 256, n_profile: int = 2001) -> HedgehogDecomposition:
    """Return radial convex h1 and h2 = h1 - h, both convex on the ball of given radius.

    h*(rho) is the positive part of the largest radius of curvature of h on the
    rho-sphere.  It is replaced by a nondecreasing step function g lying above
    it (running maximum taken one node ahead, plus the largest jump between
    neighbouring samples as a margin for unsampled radii and angles), held
    constant beyond ``radius``.  The double average h~ of g is C^1,
    nondecreasing and >= g, and

        f(rho) = cosh(rho) int_0^rho sinh(t) cosh(t)^-2 h~(t) dt

    defines h1 = f(rho) whose reverse second fundamental form has eigenvalues
    h~ (sphere directions) and h~ + tanh(rho) h~' (radial direction).
    """
    d = h.dim
    if d is None:
        raise ValueError("decompose_hedgehog: dimension of the spec is unknown")
    center = origin(d) if center is None else np.asarray(center, dtype=float)
    rho_star = np.linspace(0.0, radius, n_rho)
    h_star = np.maximum(sphere_max_eigenvalue(h, rho_star, center, n_dirs), 0.0)
    if not np.all(np.isfinite(h_star)):
        raise ValueError("decompose_hedgehog: curvature of h is not finite on the ball")
    margin = np.abs(np.diff(h_star)).max(initial=0.0) + 1e-9 * (1.0 + h_star.max())
    ahead = np.maximum.accumulate(np.concatenate([h_star[1:], h_star[-1:]]))
    g = np.maximum(np.maximum.accumulate(h_star), ahead) + margin

    rho = np.linspace(0.0, radius, n_profile)
    ht, ht_prime = double_average(rho, rho_star, g)
    integrand = np.sinh(rho) / np.cosh(rho) ** 2 * ht
    f = np.cosh(rho) * np.concatenate([[0.0], cumulative_simpson(integrand, x=rho)])
    h1 = RadialProfile(center, rho, f, ht, ht_prime)
    return HedgehogDecomposition(h1, Sum((h1, Negate(h))), h_star, rho_star)
