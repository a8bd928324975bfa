"""Fixed-boundary equilibria with flow on the unit disk.

Fields follow ``u = perp_grad(psi)``, ``B = perp_grad(A)`` with
``perp_grad = (-d_y, d_x)``. When ``psi = G(A)`` the steady equations reduce
to the scalar problem

    (1 - G'(A)^2) Lap A - G'(A) G''(A) |grad A|^2 = F(A),   A = 0 on r = 1,

and the pressure is ``p = H(A) - |u|^2/2 + |B|^2/2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .core.grid import PolarGrid, ScalarField, VectorField
from .core.contour import line_integral_level
from .core.ops import d_r, d_theta, d_x, d_y, gradient, laplacian, poisson_bracket, solve_poisson
from .core.profile import Profile
from .errors import ConditioningError, ConvergenceError, PreconditionError

__all__ = [
    "EquilibriumSpec", "TravelTime", "build_radial_equilibrium", "travel_time_radial",
    "travel_time_field", "solve_gs_disk", "gs_residual", "momentum_residual",
    "radial_pressure",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_PANELS = 2048


def _grad_sq(A):
    g = A.grid
    if g.is_scaled:
        return d_x(A) ** 2 + d_y(A) ** 2
    R, _ = g.mesh()
    return d_r(A) ** 2 + (d_theta(A) / R) ** 2


def _check_monotone(A_profile, n=4001):
    r = np.linspace(0.0, 1.0, n)[1:]
    slope = A_profile(r, 1)
    if not (np.all(slope > 0) or np.all(slope < 0)):
        raise PreconditionError("A_profile must be strictly monotone in r on (0, 1]")
    return np.sign(slope[0])


# ---------------------------------------------------------------- pressure

def radial_pressure(A_profile, G, p_boundary=0.0):
    """Pressure of a radial equilibrium as a callable of r.

    Integrates ``p'(r) = (u_theta^2 - B_theta^2) / r = (G'^2 - 1) A'^2 / r``
    inward from ``p(1) = p_boundary`` with composite 8-point Gauss-Legendre
    panels, so smooth profiles are reproduced to roundoff.
    """
    edges = np.linspace(0.0, 1.0, _PANELS + 1)

    def integrand(s):
        slope = A_profile(s, 1)
        gp = G(A_profile(s), 1)
        return (1.0 - gp * gp) * slope * slope / s

    def panel_integral(lo, hi):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        pts = mid[:, None] + half[:, None] * _GL_X[None, :]
        return half * (integrand(pts) @ _GL_W)

    pieces = panel_integral(edges[:-1], edges[1:])
    # tail[k] = int_{edges[k]}^{1}
    tail = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])

    def p(r):
        r = np.asarray(r, dtype=float)
        flat = np.clip(r.ravel(), 0.0, 1.0)
        k = np.minimum((flat * _PANELS).astype(int), _PANELS - 1)
        hi = edges[k + 1]
        out = p_boundary + tail[k + 1] + panel_integral(flat, hi)
        return out.reshape(r.shape)

    return p


# ---------------------------------------------------------------- EquilibriumSpec

@dataclass(frozen=True, eq=False)
class EquilibriumSpec:
    """Fields and structure functions of a fixed-boundary equilibrium.

    ``p`` is the total (thermal) pressure of the momentum balance. ``F`` and
    ``H`` are cubic profiles in the A-variable.
    """

    A_profile: Profile
    G: Profile
    F: Profile
    H: Profile
    A: ScalarField
    psi: ScalarField
    u: VectorField
    B: VectorField
    p: ScalarField
    p_boundary: float = 0.0
    pressure: object = field(default=None, repr=False)

    def __post_init__(self):
        scale = max(self.A.max_abs(), 1e-300)
        if np.max(np.abs(self.A.boundary_values())) > 1e-10 * scale:
            raise PreconditionError("A must vanish on the boundary circle")
        if np.max(np.abs(self.psi.values - self.G(self.A.values))) > 1e-10 * max(1.0, self.psi.max_abs()):
            raise PreconditionError("psi is not G(A) at every node")

    @property
    def grid(self):
        return self.A.grid

    def bracket_defect(self):
        """Max of |{psi, A}| over the grid."""
        return poisson_bracket(self.psi, self.A).max_abs()

    def boundary_normal_derivative(self):
        """``|d_n A|`` on r = 1 from the radial profile (exact)."""
        return float(abs(self.A_profile(1.0, 1)))


def build_radial_equilibrium(A_profile, G, grid=None, *, n_r=128, n_theta=128, p_boundary=0.0, n_knots=513):
    """Circular equilibrium from a radial flux profile ``A(r)`` and ``psi = G(A)``.

    Parameters
    ----------
    A_profile : Profile
        Strictly monotone on (0, 1] with ``A(1) = 0``.
    G : Profile
        Stream-function dependence, defined on the range of A.
    grid : PolarGrid, optional
        Defaults to ``PolarGrid.disk(n_r, n_theta)``.
    p_boundary : float
        Pressure on the boundary circle.

    Notes
    -----
    ``F`` is obtained by evaluating the left-hand side of the scalar
    equation along r, never by dividing by ``1 - G'^2``; the case
    ``G'^2 = 1`` therefore gives ``F = 0`` instead of ``0/0``.
    """
    _check_monotone(A_profile)
    a_edge = float(A_profile(1.0))
    a_scale = max(float(np.max(np.abs(A_profile(np.linspace(0, 1, 101))))), 1e-300)
    if abs(a_edge) > 1e-12 * a_scale:
        raise PreconditionError(f"A_profile must vanish at r = 1 (got {a_edge:.3e})")
    grid = grid or PolarGrid.disk(n_r, n_theta)
    if grid.is_scaled or not grid.has_axis:
        raise PreconditionError("radial equilibria live on the unscaled unit disk")

    pressure = radial_pressure(A_profile, G, p_boundary)

    # structure functions along r, re-parametrized by a = A(r)
    r = np.linspace(0.0, 1.0, n_knots)
    a = A_profile(r)
    slope = A_profile(r, 1)
    curv = A_profile(r, 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        lap = curv + np.where(r > 0, slope / np.where(r > 0, r, 1.0), curv)
    gp, gpp = G(a, 1), G(a, 2)
    F_vals = (1.0 - gp * gp) * lap - gp * gpp * slope * slope
    H_vals = pressure(r) + 0.5 * (gp * gp - 1.0) * slope * slope
    F = Profile.from_knots(a, F_vals)
    H = Profile.from_knots(a, H_vals)

    R, _ = grid.mesh()
    A_vals = A_profile(R)
    A = ScalarField(grid, A_vals, "A")
    psi = ScalarField(grid, G(A_vals), "psi")
    B_theta = A_profile(R, 1)
    zeros = np.zeros(grid.shape)
    B = VectorField(grid, {"r": zeros, "theta": B_theta}, "B")
    u = VectorField(grid, {"r": zeros, "theta": G(A_vals, 1) * B_theta}, "u")
    p = ScalarField(grid, pressure(R), "p")
    return EquilibriumSpec(A_profile, G, F, H, A, psi, u, B, p, float(p_boundary), pressure)


# ---------------------------------------------------------------- travel time

class TravelTime:
    """Travel time ``mu(c) = 2 pi r / |A'(r)|`` at ``r = A^{-1}(c)`` for radial A.

    Attributes
    ----------
    domain : (float, float)
        Open interval of admissible levels (the interior of the range of A).
    degenerate : bool
        True when mu blows up near the critical value, i.e. some probe level
        close to ``A(0)`` has ``mu > 1e3 * mu(median level)``.
    blowup_ratio : float
        Largest observed ``mu(probe) / mu(median)``.
    """

    BLOWUP = 1e3

    def __init__(self, A_profile):
        self._A = A_profile
        _check_monotone(A_profile)
        a0, a1 = float(A_profile(0.0)), float(A_profile(1.0))
        self.critical_value = a0
        self.domain = (min(a0, a1), max(a0, a1))
        median = 0.5 * (a0 + a1)
        probes = a0 + (a1 - a0) * np.logspace(-2, -12, 11)
        ratios = self(probes) / self(median)
        self.blowup_ratio = float(np.max(ratios))
        self.degenerate = bool(self.blowup_ratio > self.BLOWUP)

    def radius(self, c):
        c = np.atleast_1d(np.asarray(c, dtype=float))
        lo, hi = self.domain
        if np.any(c <= lo) or np.any(c >= hi):
            raise PreconditionError(f"level outside the open range ({lo:g}, {hi:g}) of A")
        f = self._A
        return np.array([brentq(lambda s, cc=cc: f(s) - cc, 0.0, 1.0, xtol=1e-300, rtol=1e-15) for cc in c])

    def __call__(self, c):
        scalar = np.ndim(c) == 0
        r = self.radius(c)
        mu = 2 * np.pi * r / np.abs(self._A(r, 1))
        return float(mu[0]) if scalar else mu


def travel_time_radial(A_profile):
    """Closed-form travel time of a radial flux profile; see :class:`TravelTime`."""
    return TravelTime(A_profile)


def travel_time_field(A, c):
    """``mu(c)``: integral of ``1/|grad A|`` along the level set ``{A = c}``."""
    lo, hi = float(A.values.min()), float(A.values.max())
    if not lo < c < hi:
        raise PreconditionError(f"level {c:g} outside the range ({lo:g}, {hi:g}) of A")
    speed = ScalarField(A.grid, np.sqrt(_grad_sq(A)))
    if np.any(speed.values == 0):
        raise PreconditionError("grad A vanishes at a grid node")
    return line_integral_level(A, c, weight=ScalarField(A.grid, 1.0 / speed.values))


# ---------------------------------------------------------------- Grad-Shafranov

def gs_residual(A, G, F):
    """``(1 - G'^2) Lap A - G' G'' |grad A|^2 - F(A)`` at interior nodes.

    The outer ring carries Dirichlet data and is reported as zero.
    """
    a = A.values
    gp, gpp = G(a, 1), G(a, 2)
    res = (1.0 - gp * gp) * laplacian(A).values - gp * gpp * _grad_sq(A) - F(a)
    res[-1] = 0.0
    return ScalarField(A.grid, res)


def solve_gs_disk(G, F, grid=None, *, n_r=128, n_theta=128, tol=1e-10, max_iter=200,
                  A0=None, min_conditioning=0.05, return_info=False):
    """Picard iteration for the scalar Grad-Shafranov problem on the disk.

    Each sweep solves ``Lap A_new = [F(A) + G'G''|grad A|^2] / (1 - G'^2)``
    with ``A_new = 0`` on the boundary. The update is relaxed by 0.8 every
    time the residual grows. Iteration stops when the max-norm residual of
    :func:`gs_residual` drops below ``tol``.

    Returns
    -------
    ScalarField, or ``(ScalarField, dict)`` when ``return_info`` is set.
    """
    grid = grid or PolarGrid.disk(n_r, n_theta)
    A = A0 if A0 is not None else ScalarField(grid, np.zeros(grid.shape), "A")
    omega = 1.0
    previous = np.inf
    history = []
    for it in range(1, max_iter + 1):
        a = A.values
        gp = G(a, 1)
        cond = 1.0 - gp * gp
        worst = float(np.min(cond))
        if worst < min_conditioning:
            raise ConditioningError(f"1 - |G'(A)|^2 = {worst:.3g} < {min_conditioning} during Picard sweep {it}")
        rhs = (F(a) + gp * G(a, 2) * _grad_sq(A)) / cond
        target = solve_poisson(rhs, grid)
        A = ScalarField(grid, a + omega * (target - a), "A")
        res = gs_residual(A, G, F).max_abs()
        history.append(res)
        if res < tol:
            info = {"iterations": it, "residual": res, "history": history, "relaxation": omega}
            return (A, info) if return_info else A
        if res > previous:
            omega *= 0.8
        previous = res
    raise ConvergenceError(f"Picard iteration did not converge in {max_iter} sweeps; final residual {res:.3e}",
                           residual=res, iterations=max_iter)


# ---------------------------------------------------------------- momentum balance

def momentum_residual(spec):
    """``|u.grad u - B.grad B + grad p|`` at every node (Cartesian components)."""
    ux, uy = spec.u.cartesian()
    bx, by = spec.B.cartesian()
    grid = spec.grid

    def advect(vx, vy, w):
        return vx * d_x(w, grid) + vy * d_y(w, grid)

    gp = gradient(spec.p)
    px, py = gp.cartesian()
    rx = advect(ux, uy, ux) - advect(bx, by, bx) + px
    ry = advect(ux, uy, uy) - advect(bx, by, by) + py
    return ScalarField(grid, np.hypot(rx, ry))
