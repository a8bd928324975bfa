"""Off-grid evaluation of polar-grid fields by bicubic splines."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import RectBivariateSpline

from ..errors import PreconditionError
from .grid import PolarGrid, ScalarField

__all__ = ["PolarInterpolator"]

_PAD = 4


class PolarInterpolator:
    """Evaluate a ScalarField at arbitrary physical points.

    The table is extended periodically in theta and, on disk grids, across
    the axis via ``f(-r, t) = f(r, t + pi)`` so the spline is smooth through
    the origin.
    """

    def __init__(self, field):
        if not isinstance(field, ScalarField) or not isinstance(field.grid, PolarGrid):
            raise PreconditionError("PolarInterpolator needs a ScalarField on a PolarGrid")
        g = field.grid
        f = field.values
        r = g.r
        if g.has_axis:
            k = min(_PAD, g.n_r)
            mirror = np.roll(f[:k][::-1], g.n_theta // 2, axis=1)
            r = np.concatenate([-r[:k][::-1], r])
            f = np.vstack([mirror, f])
        theta = np.concatenate([g.theta[-_PAD:] - 2 * np.pi, g.theta, g.theta[:_PAD] + 2 * np.pi])
        f = np.hstack([f[:, -_PAD:], f, f[:, :_PAD]])
        self.grid = g
        self._spline = RectBivariateSpline(r, theta, f, kx=3, ky=3, s=0)

    def _polar(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        a, b = self.grid.scale
        xi, eta = x / a, y / b
        rho = np.hypot(xi, eta)
        theta = np.mod(np.arctan2(eta, xi), 2 * np.pi)
        outside = rho > self.grid.r[-1] * (1 + 1e-12)
        if not self.grid.has_axis:
            outside |= rho < self.grid.r[0] * (1 - 1e-12)
        if np.any(outside):
            raise PreconditionError("interpolation point outside the grid")
        return rho, theta, np.broadcast(x, y).shape

    def __call__(self, x, y):
        rho, theta, shape = self._polar(x, y)
        return self._spline.ev(rho, theta).reshape(shape)

    def gradient(self, x, y):
        """Physical gradient ``(d_x f, d_y f)`` of the spline at the given points."""
        rho, theta, shape = self._polar(x, y)
        f_rho = self._spline.ev(rho, theta, dx=1)
        f_theta = self._spline.ev(rho, theta, dy=1)
        c, s = np.cos(theta), np.sin(theta)
        inv = 1.0 / np.maximum(rho, 1e-300)
        a, b = self.grid.scale
        gx = (c * f_rho - s * inv * f_theta) / a
        gy = (s * f_rho + c * inv * f_theta) / b
        return gx.reshape(shape), gy.reshape(shape)
