"""Radial function and the dual F-convex set (H_{K*} = -1/R_K)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fields import SolutionField
from ..lorentz import minkowski_form, origin
from .geometry import maximize_on_hyperbolic
from .spec import SupportSpec, Tabulated

SEARCH_RADIUS = 5.0


@dataclass
class RadialEstimate:
    value: np.ndarray
    error: np.ndarray
    argmax: np.ndarray


def radial_function(s: SupportSpec, eta, radius: float = SEARCH_RADIUS, n_grid: int = 2 ** 12) -> RadialEstimate:
    """R(eta) = sup_nu H(nu) / <eta, nu>_-, by coarse grid search and golden-section refinement.

    Candidates outside the domain of ``s`` are discarded.  Raises ValueError
    when h is not strictly negative at some probe, i.e. the set is not
    contained in the open future cone.
    """
    eta = np.asarray(eta, dtype=float)
    single = eta.ndim == 1
    pts = eta[None] if single else eta.reshape(-1, eta.shape[-1])

    def ratio(nu, idx):
        inside = s.contains(nu)
        hv = np.full(nu.shape[:-1], np.nan)
        hv[inside] = s.h(nu[inside])
        if np.any(hv[inside] >= 0):
            raise ValueError("radial_function: support function is not strictly negative")
        return hv / minkowski_form(pts[idx][:, None, :], nu)

    res = maximize_on_hyperbolic(ratio, pts, radius=radius, n_grid=n_grid)
    shape = () if single else eta.shape[:-1]
    return RadialEstimate(res.value.reshape(shape), res.error.reshape(shape),
                          res.point.reshape(shape + (eta.shape[-1],)))


def dual(s: SupportSpec, rho_max: float = 1.5, n_rho: int = 16, n_theta: int = 24,
         base=None, radius: float = SEARCH_RADIUS) -> Tabulated:
    """Tabulate h* = -1/R on a polar grid about ``base`` (d = 1 or 2)."""
    d = s.dim
    if d is None:
        raise ValueError("dual: the spec does not fix a dimension; wrap it with a dimensioned term")
    base = origin(d) if base is None else np.asarray(base, dtype=float)
    if d == 1:
        rho = np.linspace(-rho_max, rho_max, 2 * n_rho + 1)
        theta = None
    elif d == 2:
        rho = np.linspace(0.0, rho_max, n_rho + 1)
        theta = np.arange(n_theta) * (2 * np.pi / n_theta)
    else:
        raise ValueError("dual: tabulation is implemented for d = 1 and d = 2")

    def func(points):
        est = radial_function(s, points.reshape(-1, d + 1), radius=radius)
        return (-1.0 / est.value).reshape(points.shape[:-1])

    field = SolutionField.tabulate(func, base, rho, theta)
    return Tabulated(field)
