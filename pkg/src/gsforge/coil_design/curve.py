"""Star-shaped coil curves and the current sheets they carry."""

from __future__ import annotations

import csv
import io

import numpy as np

from ..core.fourier import FourierSeries, fourier_analyze
from ..errors import PreconditionError

__all__ = ["Curve", "CoilSheet", "quadrature_nodes"]

NORMAL_CONVENTION = "n = -e_r"


def quadrature_nodes(n):
    return 2 * np.pi * np.arange(n) / n


class Curve:
    """Jordan curve ``zeta(theta) = R(theta) exp(i theta)`` enclosing the unit disk.

    Parameters
    ----------
    radius : FourierSeries or float
        The radius function. A plain number gives a circle.
    """

    def __init__(self, radius):
        if not isinstance(radius, FourierSeries):
            radius = FourierSeries.constant(float(radius))
        self.radius = radius
        th = quadrature_nodes(max(256, 16 * radius.k_max + 16))
        r = radius(th)
        self.r_min = float(r.min())
        self.r_max = float(r.max())
        if self.r_min <= 1.0:
            raise PreconditionError(
                f"coil curve must stay outside the unit circle: min R(theta) = {self.r_min:.6g} <= 1")

    @classmethod
    def circle(cls, R):
        return cls(FourierSeries.constant(float(R)))

    @classmethod
    def from_samples(cls, radii, k_max=None):
        """Curve through radii sampled at uniform angles ``2 pi j / n``."""
        radii = np.asarray(radii, dtype=float)
        k_max = (radii.size - 1) // 2 if k_max is None else k_max
        return cls(fourier_analyze(radii, k_max).trimmed(1e-15))

    @property
    def mean_radius(self):
        return self.radius.mean

    @property
    def is_circle(self):
        return bool(np.all(self.radius.coeffs[self.radius.modes != 0] == 0))

    def zeta(self, theta):
        return self.radius(theta) * np.exp(1j * np.asarray(theta, dtype=float))

    def dzeta(self, theta):
        theta = np.asarray(theta, dtype=float)
        R = self.radius(theta)
        dR = self.radius.evaluate(theta, derivative=1)
        return (dR + 1j * R) * np.exp(1j * theta)

    def speed(self, theta):
        """Arc-length density ``|zeta'(theta)|``."""
        theta = np.asarray(theta, dtype=float)
        return np.hypot(self.radius(theta), self.radius.evaluate(theta, derivative=1))

    def distance_estimate(self, z):
        """Approximate distance from points ``z`` to the curve.

        Uses the radial gap scaled by the local slope, which is exact for
        circles and first-order accurate otherwise. Good enough to flag
        evaluation points that sit on the sheet.
        """
        z = np.asarray(z, dtype=complex)
        th = np.mod(np.angle(z), 2 * np.pi)
        R = self.radius(th)
        dR = self.radius.evaluate(th, derivative=1)
        return np.abs(np.abs(z) - R) * R / np.hypot(R, dR)

    def to_json(self):
        return {"R_modes": self.radius.to_json()}

    def __repr__(self):
        return f"Curve(R in [{self.r_min:.6g}, {self.r_max:.6g}], K={self.radius.k_max})"


class CoilSheet:
    """Current sheet with density ``j(theta)`` per unit arc length on a Curve.

    The sheet enters the exterior problem as ``Lap a = -j delta_Gamma``, so a
    positive density lowers the potential near the sheet.
    """

    def __init__(self, curve, density):
        if not isinstance(curve, Curve):
            curve = Curve(curve)
        if not isinstance(density, FourierSeries):
            density = FourierSeries.constant(float(density))
        self.curve = curve
        self.density = density
        self._cache = {}

    @property
    def k_max(self):
        return self.density.k_max

    def default_nodes(self):
        K = self.density.k_max + self.curve.radius.k_max
        n = 1024
        while n < 8 * K + 64:
            n *= 2
        return n

    def nodes(self, n=None):
        """Quadrature data ``(theta, zeta, weight)`` with ``weight = j |zeta'| dtheta / (2 pi)``."""
        n = n or self.default_nodes()
        if n not in self._cache:
            th = quadrature_nodes(n)
            w = self.density(th) * self.curve.speed(th) / n
            self._cache[n] = (th, self.curve.zeta(th), w)
        return self._cache[n]

    def total_current(self, n=None):
        """``oint j dS`` by the trapezoid rule."""
        _, _, w = self.nodes(n)
        return float(2 * np.pi * w.sum())

    def scaled(self, factor):
        return CoilSheet(self.curve, self.density * float(factor))

    def to_json(self):
        return {
            "R_modes": self.curve.radius.to_json(),
            "j_modes": self.density.to_json(),
            "K_max": int(self.density.k_max),
            "convention": NORMAL_CONVENTION,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(Curve(FourierSeries.from_json(obj["R_modes"])), FourierSeries.from_json(obj["j_modes"]))

    def to_csv(self, n=256):
        """CSV text with columns ``theta, x, y, j`` at ``n`` uniform angles."""
        th = quadrature_nodes(int(n))
        z = self.curve.zeta(th)
        j = self.density(th)
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["theta", "x", "y", "j"])
        for row in zip(th, z.real, z.imag, j):
            out.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def __repr__(self):
        return f"CoilSheet({self.curve!r}, j K_max={self.density.k_max})"
