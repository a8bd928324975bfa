"""Second-order finite-difference operators on polar grids.

All derivatives are centered in the interior and periodic in theta. At the
axis of a disk grid the missing neighbour ``f(-h/2, theta)`` is the value at
``(h/2, theta + pi)`` multiplied by a parity factor (+1 for scalars, -1 for
polar components of vectors). Radial derivatives on the outer ring (and the
inner ring of an annulus) use one-sided second-order stencils.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from ..errors import ConvergenceError, PreconditionError
from .grid import PolarGrid, ScalarField, VectorField

__all__ = [
    "d_r", "d_rr", "d_theta", "d_thetatheta", "d_rtheta",
    "d_x", "d_y", "gradient", "perp_gradient", "divergence", "curl_z",
    "poisson_bracket", "laplacian", "solve_poisson",
]


def _values(s):
    return s.values if isinstance(s, ScalarField) else np.asarray(s, dtype=float)


def _grid_of(s, grid):
    if grid is not None:
        return grid
    if isinstance(s, ScalarField):
        return s.grid
    raise PreconditionError("a grid is required when passing raw arrays")


def _ghost(f, parity):
    """Row just inside the axis: f(r_1, theta + pi) * parity."""
    return parity * np.roll(f[0], f.shape[1] // 2)


def d_r(s, grid=None, parity=1):
    grid = _grid_of(s, grid)
    f = _values(s)
    h = grid.dr
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    if grid.has_axis:
        out[0] = (f[1] - _ghost(f, parity)) / (2 * h)
    else:
        out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return out


def d_rr(s, grid=None, parity=1):
    grid = _grid_of(s, grid)
    f = _values(s)
    h2 = grid.dr ** 2
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h2
    if grid.has_axis:
        out[0] = (f[1] - 2 * f[0] + _ghost(f, parity)) / h2
    else:
        out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h2
    out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h2
    return out


def d_theta(s, grid=None):
    grid = _grid_of(s, grid)
    f = _values(s)
    return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2 * grid.dtheta)


def d_thetatheta(s, grid=None):
    grid = _grid_of(s, grid)
    f = _values(s)
    return (np.roll(f, -1, axis=1) - 2 * f + np.roll(f, 1, axis=1)) / grid.dtheta ** 2


def d_rtheta(s, grid=None, parity=1):
    grid = _grid_of(s, grid)
    # d_theta of a scalar keeps its parity under the axis reflection
    return d_r(d_theta(s, grid), grid, parity)


def _xi_eta_derivs(s, grid):
    f = _values(s)
    fr = d_r(f, grid)
    ft = d_theta(f, grid)
    R, T = grid.mesh()
    c, sn = np.cos(T), np.sin(T)
    return c * fr - sn * ft / R, sn * fr + c * ft / R


def d_x(s, grid=None):
    """Physical x-derivative (handles elliptical scaling)."""
    grid = _grid_of(s, grid)
    dxi, _ = _xi_eta_derivs(s, grid)
    return dxi / grid.scale[0]


def d_y(s, grid=None):
    grid = _grid_of(s, grid)
    _, deta = _xi_eta_derivs(s, grid)
    return deta / grid.scale[1]


def gradient(s, role="other"):
    """Gradient as a VectorField.

    Polar frame ``(r, theta)`` on unscaled grids; Cartesian ``(x, y)`` on
    elliptical grids, where the polar unit vectors of the computational disk
    are not orthonormal in physical space.
    """
    grid = s.grid
    if grid.is_scaled:
        return VectorField(grid, {"x": d_x(s), "y": d_y(s)}, role, ("x", "y"))
    R, _ = grid.mesh()
    return VectorField(grid, {"r": d_r(s), "theta": d_theta(s) / R}, role)


def perp_gradient(s, role="other"):
    """``(-d_y s, d_x s)``; in the polar frame ``(-(1/r) s_theta, s_r)``."""
    grid = s.grid
    if min(grid.shape) < 4:
        raise PreconditionError("perp_gradient needs at least 4 nodes per direction")
    if grid.is_scaled:
        return VectorField(grid, {"x": -d_y(s), "y": d_x(s)}, role, ("x", "y"))
    R, _ = grid.mesh()
    return VectorField(grid, {"r": -d_theta(s) / R, "theta": d_r(s)}, role)


def divergence(v):
    """Divergence in conservative form ``(1/r)[D_r(r v_r) + D_theta v_theta]``.

    Centred differences in r and theta commute (the axis reflection included),
    so the divergence of :func:`perp_gradient` output vanishes to roundoff.
    """
    grid = v.grid
    if v.frame[:2] == ("x", "y"):
        return ScalarField(grid, d_x(v["x"], grid) + d_y(v["y"], grid))
    R, _ = grid.mesh()
    vr, vt = v["r"], v["theta"]
    return ScalarField(grid, (d_r(R * vr, grid) + d_theta(vt, grid)) / R)


def curl_z(v):
    """Out-of-plane curl ``d_x v_y - d_y v_x`` in the same conservative form."""
    grid = v.grid
    if v.frame[:2] == ("x", "y"):
        return ScalarField(grid, d_x(v["y"], grid) - d_y(v["x"], grid))
    R, _ = grid.mesh()
    vr, vt = v["r"], v["theta"]
    return ScalarField(grid, (d_r(R * vt, grid) - d_theta(vr, grid)) / R)


def poisson_bracket(a, b):
    """``{a, b} = grad_perp(a) . grad(b)``.

    Written as a difference of two products so that swapping the arguments
    flips the sign bit exactly.
    """
    if not isinstance(a, ScalarField) or not isinstance(b, ScalarField):
        raise PreconditionError("poisson_bracket expects ScalarField arguments")
    if not a.grid.same_as(b.grid):
        raise PreconditionError("poisson_bracket: fields live on different grids")
    grid = a.grid
    if grid.is_scaled:
        return ScalarField(grid, d_x(a) * d_y(b) - d_y(a) * d_x(b))
    R, _ = grid.mesh()
    return ScalarField(grid, (d_r(a) * d_theta(b) - d_theta(a) * d_r(b)) / R)


# ---- Laplacian -------------------------------------------------------------

def _radial_coefficients(grid):
    r = grid.r
    h = grid.dr
    lower = 1.0 / (h * h) - 1.0 / (2.0 * h * r)
    upper = 1.0 / (h * h) + 1.0 / (2.0 * h * r)
    if grid.has_axis:
        # r_1 = h/2: the reflected neighbour drops out of the stencil exactly
        lower[0] = 0.0
    return lower, -2.0 / (h * h), upper


def _unit_laplacian(f, grid):
    """Laplacian of the computational (unscaled) disk."""
    lower, centre, upper = _radial_coefficients(grid)
    r = grid.r
    out = np.empty_like(f)
    out[1:-1] = lower[1:-1, None] * f[:-2] + centre * f[1:-1] + upper[1:-1, None] * f[2:]
    # edge rings fall back to the one-sided radial stencils
    drr, dr = d_rr(f, grid), d_r(f, grid)
    if grid.has_axis:
        out[0] = centre * f[0] + upper[0] * f[1]
    else:
        out[0] = drr[0] + dr[0] / r[0]
    out[-1] = drr[-1] + dr[-1] / r[-1]
    out += d_thetatheta(f, grid) / r[:, None] ** 2
    return out


def _anisotropic_part(f, grid):
    """``(1/2) cos(2 theta) X - sin(2 theta) Y`` with X, Y the polar forms of
    ``(f_xixi - f_etaeta)`` pieces; see :func:`laplacian`."""
    R, T = grid.mesh()
    fr = d_r(f, grid)
    ft = d_theta(f, grid)
    X = d_rr(f, grid) - fr / R - d_thetatheta(f, grid) / R ** 2
    Y = d_rtheta(f, grid) / R - ft / R ** 2
    return 0.5 * np.cos(2 * T) * X - np.sin(2 * T) * Y


def laplacian(s, grid=None):
    """Physical Laplacian. Returns an array for array input, else a ScalarField.

    On the elliptical grid ``x = a xi, y = b eta`` it splits as
    ``alpha * Lap_(xi,eta) f + beta * ((1/2) cos 2t X - sin 2t Y)`` with
    ``alpha = (a^-2 + b^-2)/2`` and ``beta = a^-2 - b^-2``.
    """
    g = _grid_of(s, grid)
    f = _values(s)
    out = _unit_laplacian(f, g)
    if g.is_scaled:
        a, b = g.scale
        alpha = 0.5 * (a ** -2 + b ** -2)
        beta = a ** -2 - b ** -2
        out = alpha * out + beta * _anisotropic_part(f, g)
    return ScalarField(g, out) if isinstance(s, ScalarField) else out


# ---- Poisson solver --------------------------------------------------------

def _modal_solve(rhs, grid, outer, inner=None):
    """Direct solve of the unscaled 5-point system, one Fourier mode at a time."""
    n_r, n_t = grid.shape
    lower, centre, upper = _radial_coefficients(grid)
    F = np.fft.rfft(rhs, axis=1)
    g_out = np.fft.rfft(np.broadcast_to(np.asarray(outer, float), (n_t,)))
    m = np.arange(F.shape[1])
    lam = -(2.0 - 2.0 * np.cos(m * grid.dtheta)) / grid.dtheta ** 2
    rows = np.arange(0 if grid.has_axis else 1, n_r - 1)
    r2 = grid.r[rows] ** 2
    U = np.zeros((n_r, F.shape[1]), dtype=complex)
    U[-1] = g_out
    if not grid.has_axis:
        g_in = np.fft.rfft(np.broadcast_to(np.asarray(inner, float), (n_t,)))
        U[0] = g_in
    ab = np.zeros((3, rows.size))
    ab[0, 1:] = upper[rows[:-1]]
    ab[2, :-1] = lower[rows[1:]]
    for k in range(F.shape[1]):
        ab[1] = centre + lam[k] / r2
        b = F[rows, k].copy()
        b[-1] -= upper[rows[-1]] * g_out[k]
        if not grid.has_axis:
            b[0] -= lower[rows[0]] * g_in[k]
        U[rows, k] = solve_banded((1, 1), ab, b)
    return np.fft.irfft(U, n=n_t, axis=1)


def solve_poisson(rhs, grid=None, boundary=0.0, inner_boundary=0.0, *, tol=1e-13, max_iter=200):
    """Solve ``Lap u = rhs`` with Dirichlet data on the outer ring.

    The discrete operator is exactly the one applied by :func:`laplacian` at
    interior nodes, so feeding the solution back reproduces ``rhs`` to
    roundoff. Unscaled grids are solved directly (FFT in theta, tridiagonal in
    r). Elliptical grids use a fixed-point iteration on the anisotropic part,
    which contracts for moderate aspect ratios.

    Parameters
    ----------
    rhs : ScalarField or ndarray
    boundary : float or array of shape (n_theta,)
        Outer Dirichlet values.
    inner_boundary : float or array
        Inner-ring values for annulus grids (ignored on disks).
    """
    g = _grid_of(rhs, grid)
    f = _values(rhs)
    if not isinstance(g, PolarGrid):
        raise PreconditionError("solve_poisson works on PolarGrid only")
    inner = None if g.has_axis else inner_boundary
    if not g.is_scaled:
        u = _modal_solve(f, g, boundary, inner)
        return ScalarField(g, u) if isinstance(rhs, ScalarField) else u

    a, b = g.scale
    alpha = 0.5 * (a ** -2 + b ** -2)
    beta = a ** -2 - b ** -2
    u = _modal_solve(f / alpha, g, boundary, inner)
    for it in range(1, max_iter + 1):
        new = _modal_solve((f - beta * _anisotropic_part(u, g)) / alpha, g, boundary, inner)
        change = np.max(np.abs(new - u))
        u = new
        if change <= tol * max(np.max(np.abs(u)), 1e-300):
            break
    else:
        raise ConvergenceError(
            f"elliptical Poisson iteration stalled after {max_iter} sweeps (last change {change:.3e})",
            residual=change, iterations=max_iter)
    return ScalarField(g, u) if isinstance(rhs, ScalarField) else u
