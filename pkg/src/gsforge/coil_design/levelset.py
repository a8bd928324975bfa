"""Coil from a level curve of the harmonic continuation of the boundary data.

With ``A_H`` harmonic near the unit circle, ``A_H = 0`` and ``-d_r A_H = f``
there, positive f makes ``A_H`` strictly decreasing outward in a collar.
Cutting it off at a level ``a_0 < 0`` (``A_ext = max(A_H, a_0)``) leaves a
field whose Laplacian is ``|grad A_H| delta_Gamma`` on ``Gamma = {A_H = a_0}``.
In the sheet convention ``Lap a = -j delta_Gamma`` that is ``j = -|grad A_H|``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..core.contour import trace_level
from ..core.fourier import FourierSeries, fourier_analyze
from ..core.grid import PolarGrid, ScalarField
from ..errors import ContourError, PreconditionError
from .curve import CoilSheet, Curve, quadrature_nodes
from .sharpness import NOISE_FLOOR

__all__ = ["HarmonicContinuation", "LevelSetCoil", "design_coil_levelset"]


class HarmonicContinuation:
    """Closed-form ``A_H = -f_0 log r + sum_{k != 0} alpha_k (r^|k| - r^-|k|) e^{ik theta}``.

    ``alpha_k = -f_k / (2|k|)`` makes ``-d_r A_H = f`` on ``r = 1``.
    """

    def __init__(self, f):
        self.f = f.trimmed(NOISE_FLOOR)
        fp = self.f.positive()
        k = np.arange(1, fp.size)
        self._k = k
        self._alpha = -fp[1:] / (2.0 * k)
        self._f0 = float(fp[0].real)

    def __call__(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = -self._f0 * np.log(r)
        if self._k.size:
            rk = np.power.outer(r, self._k)
            e = np.exp(1j * np.multiply.outer(theta, self._k))
            out = out + 2.0 * np.real(np.sum(self._alpha * (rk - 1.0 / rk) * e, axis=-1))
        return out

    def radial_derivative(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = -self._f0 / r
        if self._k.size:
            k = self._k
            rk = np.power.outer(r, k)
            rr = r[..., None] if np.ndim(r) else r
            e = np.exp(1j * np.multiply.outer(theta, k))
            out = out + 2.0 * np.real(np.sum(self._alpha * k * (rk + 1.0 / rk) / rr * e, axis=-1))
        return out

    def angular_derivative(self, r, theta):
        """``d_theta A_H`` (not divided by r)."""
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if not self._k.size:
            return np.zeros(np.broadcast(r, theta).shape)
        k = self._k
        rk = np.power.outer(r, k)
        e = np.exp(1j * np.multiply.outer(theta, k))
        return 2.0 * np.real(np.sum(1j * k * self._alpha * (rk - 1.0 / rk) * e, axis=-1))

    def gradient_norm(self, r, theta):
        return np.hypot(self.radial_derivative(r, theta), self.angular_derivative(r, theta) / r)

    def collar(self, r_cap=3.0, n_r=400, n_theta=512):
        """Outer radius of the annulus where ``d_r A_H < 0`` at every angle."""
        r = np.linspace(1.0, r_cap, n_r)
        th = quadrature_nodes(n_theta)
        dr = self.radial_derivative(r[:, None], th[None, :])
        bad = np.nonzero(np.max(dr, axis=1) >= 0.0)[0]
        if bad.size == 0:
            return float(r_cap)
        if bad[0] == 0:
            raise PreconditionError("boundary data is not positive: A_H is not decreasing at r = 1")
        return float(r[bad[0] - 1])


@dataclass(frozen=True, eq=False)
class LevelSetCoil:
    """Result of the level-set construction. Unpacks as ``(coil, A_ext)``."""

    coil: CoilSheet
    A_ext: ScalarField
    a0: float
    continuation: HarmonicContinuation
    collar: float
    contour_deviation: float

    def __iter__(self):
        return iter((self.coil, self.A_ext))


def design_coil_levelset(f, a0=None, *, grid_shape=(256, 512), r_cap=3.0, n_curve=512, k_curve=200):
    """Trace ``Gamma = {A_H = a_0}`` and put the density ``-|grad A_H|`` on it.

    Parameters
    ----------
    f : FourierSeries
        Strictly positive boundary data.
    a0 : float, optional
        Level to cut at. It must be negative and above ``max A_H`` on the
        outer edge of the collar. The default is the largest value of
        ``A_H`` on the circle a quarter of the way across the collar.
    grid_shape : (int, int)
        Annulus grid used for contour tracing and for the returned field.
    n_curve, k_curve : int
        Angles at which the traced curve is polished radially, and the number
        of Fourier modes kept for R(theta) and j(theta).

    Raises
    ------
    PreconditionError
        f is not strictly positive, or ``a_0`` lies outside the collar.
    """
    if not isinstance(f, FourierSeries):
        raise PreconditionError("boundary data must be a FourierSeries")
    fmin = float(np.min(f(quadrature_nodes(max(1024, 16 * f.k_max)))))
    if fmin <= 0.0:
        raise PreconditionError(f"level-set coils need f > 0 on the boundary; min f = {fmin:.6g}")
    AH = HarmonicContinuation(f)
    r_col = AH.collar(r_cap)
    th = quadrature_nodes(n_curve)
    floor = float(np.max(AH(np.full_like(th, r_col), th)))
    if a0 is None:
        a0 = float(np.max(AH(np.full_like(th, 1.0 + 0.25 * (r_col - 1.0)), th)))
    a0 = float(a0)
    if not (floor < a0 < 0.0):
        raise PreconditionError(
            f"a_0 = {a0:.6g} is outside the monotone collar: need {floor:.6g} < a_0 < 0 "
            f"(collar radius {r_col:.4g})")

    grid = PolarGrid.annulus(1.0, r_col, *grid_shape)
    R, T = grid.mesh()
    values = AH(R, T)
    field = ScalarField(grid, values, "A_H")
    loops = trace_level(field, a0)
    closed = [c for c in loops if c.closed]
    if len(loops) != 1 or not closed or closed[0].signed_area() <= np.pi:
        raise ContourError(f"level {a0:.6g} of A_H is not a single Jordan curve around the disk")

    radii = np.array([brentq(lambda r, t=t: float(AH(r, t)) - a0, 1.0, r_col, xtol=1e-15, rtol=1e-15)
                      for t in th])
    pts = closed[0].points
    rho = np.hypot(pts[:, 0], pts[:, 1])
    ang = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
    deviation = float(np.max(np.abs(rho - np.interp(ang, th, radii, period=2 * np.pi))))

    k_curve = min(k_curve, (n_curve - 1) // 2)
    curve = Curve(fourier_analyze(radii, k_curve).trimmed(1e-16))
    j = -AH.gradient_norm(curve.radius(th), th)
    density = fourier_analyze(j, k_curve).trimmed(1e-16)
    A_ext = ScalarField(grid, np.maximum(values, a0), "A_ext")
    return LevelSetCoil(CoilSheet(curve, density), A_ext, a0, AH, r_col, deviation)
