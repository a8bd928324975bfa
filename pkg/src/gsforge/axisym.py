"""Symmetric three-dimensional equilibria: translation and rotation invariant.

Two ansaetze are supported.

z-independent, on a :class:`PolarGrid`::

    B = C(A) e_z + e_z x grad A,      u = F(psi) e_z + e_z x grad psi,   psi = G(A)

phi-independent, on an :class:`RZGrid` in the meridional half plane::

    B = C(A)/r e_phi + (1/r) e_phi x grad A,   u = F(psi)/r e_phi + (1/r) e_phi x grad psi

With the Bernoulli function ``P = p + |u|^2/2 - |B|^2/2`` taken as a profile
``P(A)``, the momentum balance ``curl(u) x u - curl(B) x B + grad P = 0``
collapses to one scalar equation times ``grad A`` (times ``1/r^2`` in the
rotating case). Writing ``FF'`` for ``d/dA [F(G(A))^2 / 2]``::

    z-independent:    (1 - G'^2) Lap A   - G'' G' |grad A|^2 - FF' + CC' +     P' = 0
    phi-independent:  (1 - G'^2) Lap* A  - G'' G' |grad A|^2 - FF' + CC' + r^2 P' = 0

with ``Lap* = d_rr + d_zz - (1/r) d_r``. In the rotating case the toroidal
induction equation additionally requires ``F(G(A)) = C(A) G'(A)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import minimize_scalar
from scipy.spatial.distance import directed_hausdorff

from .core.elliptic import M_SINGULAR, elliptic_KE
from .core.grid import PolarGrid, RZGrid, ScalarField, VectorField
from .core.ops import d_x, d_y, laplacian, perp_gradient
from .core.profile import Profile
from .equilibrium import _grad_sq
from .errors import IncompatibleProfilesError, NearSingularError, PreconditionError

__all__ = [
    "AxisymSpec", "CompatibilityWarning", "build_fields_z_independent",
    "build_fields_phi_independent", "gs_residual_z", "gs_residual_phi", "gs_star_apply",
    "rz_derivative", "check_compatibility", "compatibility_residual", "induction_residual",
    "momentum_residual_axisym", "divergence_axisym", "boundary_residual_phi", "gs_green",
    "updown_asymmetry",
]

COMPATIBILITY_TOL = 1e-8


class CompatibilityWarning(UserWarning):
    """Rotating-case profiles violate ``F(G(A)) = C(A) G'(A)``."""


def _profile(p):
    if isinstance(p, Profile):
        return p
    if p is None:
        return Profile.constant(0.0)
    if np.isscalar(p):
        return Profile.constant(float(p))
    if callable(p):
        return Profile.from_callable(p)
    raise PreconditionError(f"cannot interpret {p!r} as a profile")


# ------------------------------------------------------------------ RZ calculus

def rz_derivative(values, grid, axis, order=1):
    """Centred difference along ``axis`` (0 = r, 1 = z); second-order one-sided at the edges.

    >>> g = RZGrid.uniform((1, 2), (-1, 1), 11, 11)
    >>> R, Z = g.mesh()
    >>> bool(np.allclose(rz_derivative(Z ** 2, g, 1, 2), 2.0))
    True
    """
    f = np.asarray(values, dtype=float)
    h = grid.dr if axis == 0 else grid.dz
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    if order == 1:
        out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
        out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
        out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    elif order == 2:
        out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h ** 2
        out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h ** 2
        out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h ** 2
    else:
        raise PreconditionError("only first and second derivatives are provided")
    return np.moveaxis(out, 0, axis)


def _rz_grid(A):
    if not isinstance(A, ScalarField) or not isinstance(A.grid, RZGrid):
        raise PreconditionError("expected a ScalarField on an RZGrid")
    return A.grid


def gs_star_apply(A):
    """``Lap* A = A_rr + A_zz - A_r / r`` by second-order differences.

    Quadratics in r and z are differentiated exactly, so ``Lap* r^2`` is
    zero and ``Lap* z^2`` is 2 up to rounding.
    """
    g = _rz_grid(A)
    R, _ = g.mesh()
    a = A.values
    out = rz_derivative(a, g, 0, 2) + rz_derivative(a, g, 1, 2) - rz_derivative(a, g, 0) / R
    return ScalarField(g, out)


# ------------------------------------------------------------------ fields

def _to_cartesian(v):
    """(x, y) components of a planar VectorField on a PolarGrid."""
    if "x" in v.components:
        return v["x"], v["y"]
    _, T = v.grid.mesh()
    c, s = np.cos(T), np.sin(T)
    return c * v["r"] - s * v["theta"], s * v["r"] + c * v["theta"]


def build_fields_z_independent(A, C, F, G):
    """Velocity and magnetic field of the translation-invariant ansatz.

    Returns two VectorFields on the polar grid of ``A``, in the frame
    ``("r", "theta", "z")`` (or ``("x", "y", "z")`` on elliptical grids).
    With ``C = F = G = 0`` the in-plane part of B is exactly the planar
    ``perp_grad A`` and u vanishes.
    """
    if not isinstance(A, ScalarField) or not isinstance(A.grid, PolarGrid):
        raise PreconditionError("z-independent fields live on a PolarGrid")
    C, F, G = map(_profile, (C, F, G))
    a = A.values
    psi = A.with_values(G(a), "psi")
    Bp = perp_gradient(A, "B")
    up = perp_gradient(psi, "u")
    frame = Bp.frame + ("z",)
    B = VectorField(A.grid, {**Bp.components, "z": C(a)}, "B", frame)
    u = VectorField(A.grid, {**up.components, "z": F(psi.values)}, "u", frame)
    return u, B


def build_fields_phi_independent(A, C, F, G):
    """Velocity and magnetic field of the rotation-invariant ansatz.

    Components are ``(r, phi, z)``; the poloidal part of B is
    ``(A_z, -A_r) / r``.
    """
    g = _rz_grid(A)
    C, F, G = map(_profile, (C, F, G))
    R, _ = g.mesh()
    a = A.values
    psi = G(a)

    def toroidal_ansatz(f, tor, role):
        return VectorField(g, {"r": rz_derivative(f, g, 1) / R, "phi": tor / R,
                               "z": -rz_derivative(f, g, 0) / R}, role, ("r", "phi", "z"))

    return toroidal_ansatz(psi, F(psi), "u"), toroidal_ansatz(a, C(a), "B")


def divergence_axisym(v):
    """FD divergence of a field from either builder."""
    g = v.grid
    if isinstance(g, RZGrid):
        R, _ = g.mesh()
        return ScalarField(g, rz_derivative(R * v["r"], g, 0) / R + rz_derivative(v["z"], g, 1))
    vx, vy = _to_cartesian(v)
    return ScalarField(g, d_x(vx, g) + d_y(vy, g))


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _components(v):
    """Cartesian (x, y, z) on polar grids, (r, phi, z) on RZ grids."""
    if isinstance(v.grid, RZGrid):
        return v["r"], v["phi"], v["z"]
    vx, vy = _to_cartesian(v)
    return vx, vy, v["z"]


def _curl(w, grid):
    if isinstance(grid, RZGrid):
        R, _ = grid.mesh()
        wr, wp, wz = w
        return (-rz_derivative(wp, grid, 1),
                rz_derivative(wr, grid, 1) - rz_derivative(wz, grid, 0),
                rz_derivative(R * wp, grid, 0) / R)
    wx, wy, wz = w
    return d_y(wz, grid), -d_x(wz, grid), d_x(wy, grid) - d_y(wx, grid)


def _gradient(f, grid):
    if isinstance(grid, RZGrid):
        return rz_derivative(f, grid, 0), np.zeros(grid.shape), rz_derivative(f, grid, 1)
    return d_x(f, grid), d_y(f, grid), np.zeros(grid.shape)


def _vector(grid, comps, role):
    frame = ("r", "phi", "z") if isinstance(grid, RZGrid) else ("x", "y", "z")
    return VectorField(grid, dict(zip(frame, comps)), role, frame)


def induction_residual(u, B):
    """``curl(u x B)`` by finite differences, as a VectorField.

    Translation-invariant fields give O(h^2) whenever ``psi = G(A)``. For
    rotation-invariant ones the toroidal component is
    ``2 (C G' - F(G)) A_z / r^3`` and only vanishes under compatibility.
    """
    g = B.grid
    w = _cross(_components(u), _components(B))
    return _vector(g, _curl(w, g), "other")


def momentum_residual_axisym(u, B, P, A):
    """``curl(u) x u - curl(B) x B + grad P(A)``, with every derivative taken numerically.

    This does not use the scalar reduction, so it is an independent check of
    :func:`gs_residual_z` and :func:`gs_residual_phi`: analytically it equals
    the scalar residual times ``grad A`` (divided by ``r^2`` for the
    rotating ansatz).
    """
    g = B.grid
    P = _profile(P)
    uc, bc = _components(u), _components(B)
    lhs = _cross(_curl(uc, g), uc)
    jxb = _cross(_curl(bc, g), bc)
    gp = _gradient(P(A.values), g)
    return _vector(g, [l - m + p for l, m, p in zip(lhs, jxb, gp)], "other")


# ------------------------------------------------------------------ scalar residuals

def gs_residual_z(A, G, C, F, P):
    """Scalar residual of the translation-invariant equation at interior nodes.

    ``(1 - G'^2) Lap A - G'' G' |grad A|^2 - FF'(A) + CC'(A) + P'(A)``.
    With C and F zero and ``P' = -F_2d`` the arithmetic is the same, operation
    for operation, as :func:`gsforge.equilibrium.gs_residual`.
    """
    G, C, F, P = map(_profile, (G, C, F, P))
    a = A.values
    gp, gpp = G(a, 1), G(a, 2)
    psi = G(a)
    ff = F(psi) * F(psi, 1) * gp
    cc = C(a) * C(a, 1)
    base = (1.0 - gp * gp) * laplacian(A).values - gp * gpp * _grad_sq(A)
    res = base - ff + cc + P(a, 1)
    res[-1] = 0.0
    return ScalarField(A.grid, res)


def gs_residual_phi(A, G, C, F, P, *, check=True):
    """Scalar residual of the rotation-invariant equation.

    ``(1 - G'^2) Lap* A - G'' G' |grad A|^2 - FF'(A) + CC'(A) + r^2 P'(A)``
    everywhere on the grid, edges included (one-sided differences there).
    A :class:`CompatibilityWarning` is issued when the profiles cannot also
    satisfy the induction equation; pass ``check=False`` to skip that.
    """
    g = _rz_grid(A)
    G, C, F, P = map(_profile, (G, C, F, P))
    a = A.values
    if check:
        lo, hi = float(np.min(a)), float(np.max(a))
        res_c = compatibility_residual(G, C, F, (lo, hi))
        if res_c > COMPATIBILITY_TOL:
            warnings.warn(f"profiles violate F(G(A)) = C(A) G'(A) by {res_c:.3g}; "
                          "the induction equation is not satisfied", CompatibilityWarning, stacklevel=2)
    R, _ = g.mesh()
    gp, gpp = G(a, 1), G(a, 2)
    psi = G(a)
    grad_sq = rz_derivative(a, g, 0) ** 2 + rz_derivative(a, g, 1) ** 2
    ff = F(psi) * F(psi, 1) * gp
    cc = C(a) * C(a, 1)
    res = (1.0 - gp * gp) * gs_star_apply(A).values - gpp * gp * grad_sq - ff + cc + R * R * P(a, 1)
    return ScalarField(g, res)


# ------------------------------------------------------------------ compatibility

def _sweep(A_range, n):
    lo, hi = map(float, A_range)
    if hi < lo:
        lo, hi = hi, lo
    return np.linspace(lo, hi, n)


def compatibility_residual(G, C, F, A_range, n=2001):
    """``max |F(G(a)) - C(a) G'(a)|`` over ``n`` points of ``A_range``. Never raises."""
    G, C, F = map(_profile, (G, C, F))
    a = _sweep(A_range, n)
    return float(np.max(np.abs(F(G(a)) - C(a) * G(a, 1))))


def check_compatibility(G, C, F, A_range, n=2001, *, atol=1e-14):
    """Residual of the rotating-case closure ``F(G(a)) = C(a) G'(a)``.

    The condition fixes ``C = F(G) / G'`` wherever the flow is not frozen.
    Where ``G'(a) = 0`` no choice of C can balance a nonzero ``F(G(a))``,
    and the profiles are rejected outright.

    Raises
    ------
    IncompatibleProfilesError
        ``G'(a) = 0`` and ``F(G(a)) != 0`` at some sweep point.

    Examples
    --------
    >>> one = Profile.constant(1.0)
    >>> check_compatibility(Profile.linear(1.0), one, one, (0, 1))
    0.0
    >>> check_compatibility(Profile.linear(2.0), one, one, (0, 1))
    1.0
    """
    G, C, F = map(_profile, (G, C, F))
    a = _sweep(A_range, n)
    fg, gp = F(G(a)), G(a, 1)
    frozen = (np.abs(gp) <= atol) & (np.abs(fg) > atol)
    if np.any(frozen):
        at = float(a[np.argmax(frozen)])
        raise IncompatibleProfilesError(
            f"G'({at:.6g}) = 0 but F(G({at:.6g})) = {float(fg[np.argmax(frozen)]):.6g}: "
            "no C(A) can close the toroidal induction equation")
    return float(np.max(np.abs(fg - C(a) * gp)))


# ------------------------------------------------------------------ boundary condition

def boundary_residual_phi(A, boundary, G, C, F, P, B_ext=0.0):
    """Pressure-balance mismatch along a meridional boundary curve.

    Evaluates ``(G'(0)^2 - 1) |d_n A|^2 / (2 r^2) - H(0, r) + |B_ext|^2 / 2``
    at each boundary point, where ``H(0, r) = P(0) - F(G(0))^2 / (2 r^2) +
    C(0)^2 / (2 r^2)``. ``|d_n A|`` is taken as ``|grad A|`` since A is
    constant on the boundary. Returned as an array, one value per point;
    there is no pass/fail threshold.

    Parameters
    ----------
    boundary : (n, 2) array of (r, z)
    B_ext : float or array
        External field magnitude at the boundary points.
    """
    g = _rz_grid(A)
    G, C, F, P = map(_profile, (G, C, F, P))
    pts = np.asarray(boundary, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise PreconditionError("boundary must be an (n, 2) array of (r, z) points")
    spline = RectBivariateSpline(g.r, g.z, A.values, kx=3, ky=3)
    ar = spline.ev(pts[:, 0], pts[:, 1], dx=1)
    az = spline.ev(pts[:, 0], pts[:, 1], dy=1)
    r2 = pts[:, 0] ** 2
    g0 = float(G(0.0))
    H0 = float(P(0.0)) + (float(C(0.0)) ** 2 - float(F(g0)) ** 2) / (2.0 * r2)
    gp0 = float(G(0.0, 1))
    return (gp0 ** 2 - 1.0) * (ar ** 2 + az ** 2) / (2.0 * r2) - H0 + 0.5 * np.asarray(B_ext) ** 2


# ------------------------------------------------------------------ Green's function

# (1 - m/2) K(m) - E(m) = pi * sum_k c_k m^k; used below SMALL_M to avoid cancellation
_SERIES = np.array([0, 0, 1 / 32, 3 / 128, 75 / 4096, 245 / 16384, 6615 / 524288,
                    22869 / 2097152, 1288287 / 134217728, 4601025 / 536870912])
SMALL_M = 1e-2


def _ring_kernel(m):
    m = np.asarray(m, dtype=float)
    out = np.empty_like(m)
    small = m < SMALL_M
    if np.any(small):
        out[small] = np.pi * np.polynomial.polynomial.polyval(m[small], _SERIES)
    if np.any(~small):
        K, E = elliptic_KE(m[~small])
        out[~small] = (1.0 - 0.5 * m[~small]) * K - E
    return out


def gs_green(source, point, *, weighted=False):
    """Flux of a unit ring current, ``sqrt(r r') / (pi k) [(1 - k^2/2) K - E]``.

    ``K`` and ``E`` take the parameter ``m = k^2 = 4 r r' / ((r + r')^2 + (z - z')^2)``.
    The raw kernel is symmetric in its two arguments. With ``weighted=True``
    it is divided by the source radius ``r'``, which is the form that
    integrates against a density in ``r' dr' dz'``.

    Accepts broadcastable arrays for the evaluation point.

    Raises
    ------
    NearSingularError
        Points coincide, or ``m >= 1 - 1e-12``.
    """
    rs, zs = (float(c) for c in source)
    r = np.asarray(point[0], dtype=float)
    z = np.asarray(point[1], dtype=float)
    if rs <= 0 or np.any(r <= 0):
        raise PreconditionError("both points must lie off the axis (r > 0)")
    denom = (r + rs) ** 2 + (z - zs) ** 2
    m = 4.0 * r * rs / denom
    if np.any(m >= M_SINGULAR):
        raise NearSingularError(f"evaluation point too close to the source ring (k^2 = {float(np.max(m)):.15g})")
    k = np.sqrt(m)
    out = np.sqrt(r * rs) / (np.pi * k) * _ring_kernel(m)
    if weighted:
        out = out / rs
    return out if out.ndim else float(out)


# ------------------------------------------------------------------ up-down symmetry

def _boundary_hausdorff(boundary, z0):
    pts = np.asarray(boundary, dtype=float)
    mirrored = pts.copy()
    mirrored[:, 1] = 2.0 * z0 - pts[:, 1]
    return max(directed_hausdorff(pts, mirrored)[0], directed_hausdorff(mirrored, pts)[0])


def updown_asymmetry(A, boundary=None, z0=None, *, n_s=129):
    """Distance of a meridional configuration from its mirror image.

    The field term is ``max |A(r, z0 + s) - A(r, z0 - s)|`` over grid radii
    and ``s`` up to the nearer z-edge, with A interpolated by a bicubic
    spline. When ``z0`` is not given, it is found by a bounded scalar
    minimisation started from the z-centroid of ``|A|``, and the better of
    the centroid and the minimiser is kept.

    Returns
    -------
    dict
        ``asymmetry`` (field term plus boundary term), ``field``,
        ``boundary`` (symmetric Hausdorff distance of the curve to its
        reflection, 0 when no curve is given) and ``z0``.
    """
    g = _rz_grid(A)
    spline = RectBivariateSpline(g.r, g.z, A.values, kx=3, ky=3)
    z_lo, z_hi = float(g.z[0]), float(g.z[-1])
    u = np.linspace(0.0, 1.0, n_s)

    def field_term(c):
        half = min(c - z_lo, z_hi - c)
        if half <= 0:
            return np.inf
        rr, s = np.meshgrid(g.r, u * half, indexing="ij")
        up = spline.ev(rr, c + s)
        down = spline.ev(rr, c - s)
        return float(np.max(np.abs(up - down)))

    def total(c):
        b = _boundary_hausdorff(boundary, c) if boundary is not None else 0.0
        return field_term(c) + b

    if z0 is None:
        w = np.abs(A.values).sum(axis=0)
        centre = float(np.sum(w * g.z) / np.sum(w)) if np.sum(w) > 0 else 0.5 * (z_lo + z_hi)
        span = 0.25 * (z_hi - z_lo)
        lo, hi = max(z_lo, centre - span), min(z_hi, centre + span)
        best = minimize_scalar(total, bounds=(lo, hi), method="bounded",
                               options={"xatol": 1e-13 * max(1.0, abs(centre))})
        z0 = centre if total(centre) <= best.fun else float(best.x)
    z0 = float(z0)
    field = field_term(z0)
    bterm = _boundary_hausdorff(boundary, z0) if boundary is not None else 0.0
    return {"asymmetry": field + bterm, "field": field, "boundary": bterm, "z0": z0}


# ------------------------------------------------------------------ container

@dataclass(frozen=True, eq=False)
class AxisymSpec:
    """A symmetric configuration with its profiles and derived fields.

    Build with :meth:`build`; the constructor trusts its arguments.
    """

    symmetry: str
    A: ScalarField
    G: Profile
    C: Profile
    F: Profile
    P: Profile
    u: VectorField
    B: VectorField
    compatibility: float = 0.0

    @classmethod
    def build(cls, symmetry, A, G=None, C=None, F=None, P=None):
        G, C, F, P = map(_profile, (G, C, F, P))
        if symmetry == "z_independent":
            u, B = build_fields_z_independent(A, C, F, G)
            compat = 0.0
        elif symmetry == "phi_independent":
            u, B = build_fields_phi_independent(A, C, F, G)
            compat = compatibility_residual(G, C, F, (float(A.values.min()), float(A.values.max())))
            if compat > COMPATIBILITY_TOL:
                warnings.warn(f"compatibility residual {compat:.3g} exceeds {COMPATIBILITY_TOL:g}",
                              CompatibilityWarning, stacklevel=2)
        else:
            raise PreconditionError(f"unknown symmetry {symmetry!r}; use 'z_independent' or 'phi_independent'")
        return cls(symmetry, A, G, C, F, P, u, B, compat)

    @property
    def psi(self):
        return self.A.with_values(self.G(self.A.values), "psi")

    def residual(self):
        if self.symmetry == "z_independent":
            return gs_residual_z(self.A, self.G, self.C, self.F, self.P)
        return gs_residual_phi(self.A, self.G, self.C, self.F, self.P, check=False)

    def report(self):
        res = self.residual().values
        ind = induction_residual(self.u, self.B)
        return {
            "symmetry": self.symmetry,
            "gs_residual": float(np.max(np.abs(res))),
            "induction": float(np.max(ind.norm())),
            "divergence_u": float(np.max(np.abs(divergence_axisym(self.u).values))),
            "divergence_B": float(np.max(np.abs(divergence_axisym(self.B).values))),
            "compatibility": self.compatibility,
        }
