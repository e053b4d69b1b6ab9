"""Tabulated functions on H^d over geodesic polar grids."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .lorentz import direction_from_angles, log_map, polar_to


class OutOfDomainError(ValueError):
    pass


@dataclass
class SolutionField:
    """Values of a function on a polar grid (rho x theta) about ``base``.

    d=2: ``rho`` is a strictly increasing grid starting at 0 and ``theta`` a
    uniform grid on [0, 2 pi) (periodic); interpolation is bicubic in the
    (rho, theta) chart.  d=1: ``rho`` is a signed arc-length grid along H^1 and
    ``theta`` is unused; interpolation is a cubic spline.
    """

    base: np.ndarray
    rho: np.ndarray
    values: np.ndarray
    theta: np.ndarray | None = None
    residual_stats: dict | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        self.rho = np.asarray(self.rho, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.rho) <= 0):
            raise ValueError("rho grid must be strictly increasing")
        d = self.dim
        if d == 1:
            if self.values.shape != self.rho.shape:
                raise ValueError("values must match the rho grid")
            self._interp = CubicSpline(self.rho, self.values)
        elif d == 2:
            self.theta = np.asarray(self.theta, dtype=float)
            nt = self.theta.size
            if self.values.shape != (self.rho.size, nt):
                raise ValueError("values must have shape (len(rho), len(theta))")
            if self.rho[0] != 0.0:
                raise ValueError("d=2 polar grids start at rho = 0")
            step = 2 * np.pi / nt
            if not np.allclose(self.theta, self.theta[0] + step * np.arange(nt)):
                raise ValueError("theta grid must be uniform over one period")
            pad = 4
            th = np.concatenate([self.theta[-pad:] - 2 * np.pi, self.theta, self.theta[:pad] + 2 * np.pi])
            vals = np.concatenate([self.values[:, -pad:], self.values, self.values[:, :pad]], axis=1)
            self._interp = RectBivariateSpline(self.rho, th, vals, kx=3, ky=3)
        else:
            raise ValueError("tabulated fields are implemented for d = 1 and d = 2")

    @property
    def dim(self) -> int:
        return self.base.shape[-1] - 1

    @property
    def rho_max(self) -> float:
        return float(self.rho[-1])

    def chart(self, points):
        """Polar chart coordinates of points: (rho,) for d=1, (rho, theta) for d=2."""
        u = log_map(self.base, points)
        if self.dim == 1:
            return (u[..., 0],)
        r = np.linalg.norm(u, axis=-1)
        th = np.mod(np.arctan2(u[..., 1], u[..., 0]) - self.theta[0], 2 * np.pi) + self.theta[0]
        return r, th

    def contains(self, points, slack: float = 1e-12):
        c = self.chart(points)
        if self.dim == 1:
            return (c[0] >= self.rho[0] - slack) & (c[0] <= self.rho[-1] + slack)
        return c[0] <= self.rho[-1] + slack

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        if not np.all(self.contains(points)):
            raise OutOfDomainError("tabulated query outside the grid domain")
        c = self.chart(points)
        if self.dim == 1:
            return self._interp(np.clip(c[0], self.rho[0], self.rho[-1]))
        r, th = c
        return self._interp.ev(np.minimum(r, self.rho[-1]), th)

    def node_points(self) -> np.ndarray:
        if self.dim == 1:
            return polar_to(self.base, self.rho, np.ones((self.rho.size, 1)))
        R, T = np.meshgrid(self.rho, self.theta, indexing="ij")
        return polar_to(self.base, R, direction_from_angles(T, 2))

    @classmethod
    def tabulate(cls, func, base, rho, theta=None, **kw) -> "SolutionField":
        """Evaluate ``func`` (vectorized over points) on a polar grid."""
        base = np.asarray(base, dtype=float)
        rho = np.asarray(rho, dtype=float)
        if base.shape[-1] == 2:
            pts = polar_to(base, rho, np.ones((rho.size, 1)))
            return cls(base, rho, np.asarray(func(pts), dtype=float), None, **kw)
        theta = np.asarray(theta, dtype=float)
        R, T = np.meshgrid(rho, theta, indexing="ij")
        pts = polar_to(base, R, direction_from_angles(T, 2))
        return cls(base, rho, np.asarray(func(pts), dtype=float), theta, **kw)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        out = {"base": self.base.tolist(), "rho": self.rho.tolist(), "values": self.values.tolist()}
        if self.theta is not None:
            out["theta"] = self.theta.tolist()
        if self.residual_stats is not None:
            out["residual_stats"] = dict(self.residual_stats)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SolutionField":
        return cls(np.asarray(data["base"]), np.asarray(data["rho"]), np.asarray(data["values"]),
                   None if data.get("theta") is None else np.asarray(data["theta"]),
                   data.get("residual_stats"))

    def to_csv(self, residuals=None) -> str:
        """CSV rows (rho, theta, h, residual) with round-trip precision."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.dim == 1:
            w.writerow(["rho", "h", "residual"])
            res = np.full(self.rho.shape, np.nan) if residuals is None else np.asarray(residuals)
            for r, v, e in zip(self.rho, self.values, res):
                w.writerow([f"{r:.17g}", f"{v:.17g}", f"{e:.17g}"])
        else:
            w.writerow(["rho", "theta", "h", "residual"])
            res = np.full(self.values.shape, np.nan) if residuals is None else np.asarray(residuals)
            for i, r in enumerate(self.rho):
                for j, t in enumerate(self.theta):
                    w.writerow([f"{r:.17g}", f"{t:.17g}", f"{self.values[i, j]:.17g}", f"{res[i, j]:.17g}"])
        return buf.getvalue()
