"""Newton potential of a current sheet and the exterior representation formula.

With ``N(z) = (1/2 pi) oint log|z - zeta| j dS`` the exterior potential is

    a(z) = c_0 - Re F(z) - N(z) - (f_ave / 2 pi) log|z|,
    F(z) = sum_{k>=1} conj(c_k) z^(-k),

where ``c_0`` and ``c_k`` are the interior Taylor data of N. On ``|z| = 1``
the first three terms cancel exactly, so ``a`` vanishes there for any sheet.
The sign of the logarithm is fixed by ``-d_r a = f`` on the unit circle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, NearSingularError, PreconditionError
from .curve import CoilSheet, quadrature_nodes

__all__ = ["ExteriorPotential", "newton_potential", "newton_gradient", "exterior_potential", "taylor_data"]

NEAR_SINGULAR = 1e-8
NODES_PER_GAP = 8.0      # n >= 8 L / d keeps the trapezoid error near exp(-50)
MAX_NODES_LOG2 = 20
_CHUNK = 1 << 20


def _as_points(z, y=None):
    if y is not None:
        z = np.asarray(z, dtype=float) + 1j * np.asarray(y, dtype=float)
    return np.asarray(z, dtype=complex)


def _guard(coil, z):
    d = coil.curve.distance_estimate(z)
    if d.size and np.min(d) < NEAR_SINGULAR:
        k = int(np.argmin(d))
        raise NearSingularError(
            f"evaluation point {complex(z.ravel()[k]):.6g} lies within {NEAR_SINGULAR:g} of the coil")


def _resolution_groups(coil, zs, n):
    """Split points by the trapezoid node count their distance to the sheet needs.

    The trapezoid rule on a log or Cauchy kernel loses accuracy like
    ``exp(-2 pi d / ds)`` for a point at distance ``d`` from nodes spaced
    ``ds`` apart, so points near the sheet get proportionally more nodes.
    An explicit ``n`` disables this.
    """
    if n is not None or zs.size == 0:
        return [(n, np.arange(zs.size))]
    th = quadrature_nodes(256)
    length = 2 * np.pi * float(np.mean(coil.curve.speed(th)))
    d = np.maximum(coil.curve.distance_estimate(zs), NEAR_SINGULAR)
    base = int(np.log2(coil.default_nodes()))
    need = np.ceil(np.log2(np.maximum(NODES_PER_GAP * length / d, 1.0))).astype(int)
    exps = np.clip(need, base, MAX_NODES_LOG2)
    return [(1 << int(e), np.nonzero(exps == e)[0]) for e in np.unique(exps)]


def _chunked(zs, n_q, fn):
    out = []
    step = max(1, _CHUNK // n_q)
    for s in range(0, zs.size, step):
        out.append(fn(zs[s:s + step]))
    return np.concatenate(out) if out else np.zeros(0, dtype=complex)


def newton_potential(coil, z, *, method="quadrature", n=None):
    """Newton potential ``N(z)`` of the sheet.

    ``method="quadrature"`` applies the trapezoid rule to the log kernel and
    works anywhere off the sheet. ``method="series"`` sums the interior
    Taylor expansion ``c_0 - Re sum c_k z^k`` and is valid for
    ``|z| < min R``.
    """
    z = _as_points(z)
    shape = z.shape
    zs = z.ravel()
    if method == "series":
        if np.any(np.abs(zs) >= coil.curve.r_min):
            raise DomainError("interior series used outside |z| < min R")
        c0, c = taylor_data(coil)
        k = np.arange(1, c.size + 1)
        vals = c0 - np.real(_chunked(zs, c.size, lambda w: np.power.outer(w, k) @ c))
        return vals.reshape(shape)
    if method != "quadrature":
        raise PreconditionError(f"unknown method {method!r}")
    _guard(coil, zs)
    vals = np.empty(zs.size)
    for n_q, idx in _resolution_groups(coil, zs, n):
        _, zeta, w = coil.nodes(n_q)
        vals[idx] = np.real(_chunked(zs[idx], zeta.size, lambda p: np.log(np.abs(p[:, None] - zeta[None, :])) @ w))
    return vals.reshape(shape)


def newton_gradient(coil, z, *, n=None):
    """``(d_x N, d_y N)`` by quadrature of ``(z - zeta)/|z - zeta|^2``."""
    z = _as_points(z)
    shape = z.shape
    zs = z.ravel()
    _guard(coil, zs)
    g = np.empty(zs.size, dtype=complex)
    for n_q, idx in _resolution_groups(coil, zs, n):
        _, zeta, w = coil.nodes(n_q)

        def grad(p, zeta=zeta, w=w):
            d = p[:, None] - zeta[None, :]
            return (d / (d.real ** 2 + d.imag ** 2)) @ w

        g[idx] = _chunked(zs[idx], zeta.size, grad)
    return g.real.reshape(shape), g.imag.reshape(shape)


def taylor_data(coil, *, k_max=None, rel_floor=1e-17):
    """Interior expansion data ``(c_0, c_k for k >= 1)`` of the Newton potential.

    ``c_0 = (1/2pi) int j log|zeta| |zeta'| dtheta`` and
    ``c_k = (1/2pi k) int zeta^(-k) j |zeta'| dtheta``. The number of modes
    is chosen so that ``min R ** -K`` falls below ``rel_floor``.
    """
    key = ("taylor", k_max, rel_floor)
    if key in coil._cache:
        return coil._cache[key]
    if k_max is None:
        k_max = int(np.ceil(-np.log(rel_floor) / np.log(coil.curve.r_min)))
        k_max = min(max(k_max, 8), 4096)
    n = coil.default_nodes()
    while n < 4 * (k_max + coil.k_max + 32):
        n *= 2
    _, zeta, w = coil.nodes(n)
    c0 = float(np.real(np.log(np.abs(zeta)) @ w))
    inv = 1.0 / zeta
    c = np.empty(k_max, dtype=complex)
    power = np.ones_like(zeta)
    for k in range(1, k_max + 1):
        power = power * inv
        c[k - 1] = (power @ w) / k
    coil._cache[key] = (c0, c)
    return c0, c


@dataclass(frozen=True, eq=False)
class ExteriorPotential:
    """Evaluable exterior field of a coil, valid for ``|z| >= 1``.

    Parameters
    ----------
    c0, c : float, ndarray of complex
        Interior Taylor data of the sheet's Newton potential.
    coil : CoilSheet
    f_ave : float
        ``oint f dl`` over the unit circle.
    """

    c0: float
    c: np.ndarray
    coil: CoilSheet
    f_ave: float
    n_quad: int | None = None

    @property
    def log_coefficient(self):
        """Coefficient of ``log|z|`` in the far field (zero when currents balance)."""
        return -self.coil.total_current(self.n_quad) / (2 * np.pi) - self.f_ave / (2 * np.pi)

    def _check(self, z):
        if np.any(np.abs(z) < 1.0 - 1e-12):
            raise DomainError("exterior potential evaluated inside the unit disk")

    def _F(self, z):
        k = np.arange(1, self.c.size + 1)
        cc = np.conj(self.c)
        return _chunked(z, self.c.size, lambda w: np.power.outer(1.0 / w, k) @ cc)

    def _dF(self, z):
        k = np.arange(1, self.c.size + 1)
        cc = -k * np.conj(self.c)
        return _chunked(z, self.c.size, lambda w: np.power.outer(1.0 / w, k + 1) @ cc)

    def __call__(self, z, y=None):
        z = _as_points(z, y)
        shape = z.shape
        zs = z.ravel()
        self._check(zs)
        N = newton_potential(self.coil, zs, n=self.n_quad)
        val = self.c0 - np.real(self._F(zs)) - N - self.f_ave / (2 * np.pi) * np.log(np.abs(zs))
        return val.reshape(shape)

    def gradient(self, z, y=None):
        """Physical gradient ``(d_x a, d_y a)``."""
        z = _as_points(z, y)
        shape = z.shape
        zs = z.ravel()
        self._check(zs)
        nx, ny = newton_gradient(self.coil, zs, n=self.n_quad)
        dF = self._dF(zs)
        beta = -self.f_ave / (2 * np.pi)
        gl = zs / np.abs(zs) ** 2
        gx = -dF.real - nx + beta * gl.real
        gy = dF.imag - ny + beta * gl.imag
        return gx.reshape(shape), gy.reshape(shape)

    def normal_derivative(self, theta):
        """``-d_r a`` on the unit circle from the analytic gradient."""
        theta = np.asarray(theta, dtype=float)
        z = np.exp(1j * theta)
        gx, gy = self.gradient(z)
        return -(gx * np.cos(theta) + gy * np.sin(theta))


def exterior_potential(coil, f_ave, *, n=None):
    """Assemble the exterior representation for a coil and boundary flux ``f_ave``."""
    if not isinstance(coil, CoilSheet):
        raise PreconditionError("exterior_potential needs a CoilSheet")
    c0, c = taylor_data(coil)
    return ExteriorPotential(c0, c, coil, float(f_ave), n)
