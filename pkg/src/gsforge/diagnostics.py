"""Integral and boundary identities that genuine equilibria must satisfy.

* :func:`virial_check` tests the scaling identity obtained by dotting the
  divergence-form momentum balance with the position vector.
* :func:`serrin_check` measures how far ``|d_n A|`` is from constant on the
  boundary. A free-boundary equilibrium with no external field needs it
  constant, and that forces a disk.
* :func:`free_boundary_audit` evaluates the pressure-balance condition on
  the boundary and returns the external field strength needed to satisfy it.
* :func:`stellarator_loop` closes the loop: it audits an equilibrium,
  designs the coil that supplies the required field and checks the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coil_design import (
    Curve, design_coil_perturbed, design_coil_spectral, exterior_potential, verify_coil,
)
from .core.fourier import fourier_analyze
from .core.grid import PolarGrid, RZGrid, ScalarField, VectorField
from .core.interp import PolarInterpolator
from .core.ops import d_x, d_y
from .core.quadrature import disk_integral, rz_integral
from .errors import PreconditionError
from .io import Report

__all__ = [
    "VirialInput", "virial_check", "serrin_check", "free_boundary_audit", "stellarator_loop",
    "BOUNDARY_TOL", "RIGIDITY_THRESHOLD",
]

BOUNDARY_TOL = 1e-8
RIGIDITY_THRESHOLD = 1e-4


# ----------------------------------------------------------------- virial

def _density(rho, grid):
    if isinstance(rho, ScalarField):
        return rho.values
    return np.full(grid.shape, float(rho))


def _components(v, d):
    """Cartesian components as a list of arrays."""
    if isinstance(v.grid, RZGrid):
        return [v.get("r"), v.get("phi"), v.get("z")]
    vx, vy = v.cartesian()
    return [vx, vy] + ([v.get("z")] if d == 3 else [])


def _outer_normal(grid):
    """Unit outward normal on the outer ring of a polar grid (ellipse aware)."""
    x, y = grid.cartesian()
    a, b = grid.scale
    nx, ny = x[-1] / a ** 2, y[-1] / b ** 2
    s = np.hypot(nx, ny)
    return nx / s, ny / s


@dataclass(frozen=True, eq=False)
class VirialInput:
    """Fields entering the virial identity.

    ``q`` is the thermal pressure, so ``p = q + |B|^2 / 2`` is the total
    pressure appearing in the momentum balance. Fields on a PolarGrid are
    read as planar (``d = 2``); fields on an RZGrid as axisymmetric in
    three dimensions (``d = 3``, volume element ``2 pi r dr dz``).
    """

    rho: object
    u: VectorField
    B: VectorField
    q: ScalarField
    d: int = 2

    def __post_init__(self):
        if self.d not in (2, 3):
            raise PreconditionError("domain dimension must be 2 or 3")
        grid = self.q.grid
        if isinstance(grid, RZGrid) and self.d != 3:
            raise PreconditionError("RZ fields are axisymmetric: use d = 3")
        for v in (self.u, self.B):
            if not v.grid.same_as(grid):
                raise PreconditionError("u, B and q must share a grid")

    @classmethod
    def from_equilibrium(cls, spec, rho=1.0):
        """Planar input from an :class:`~gsforge.equilibrium.EquilibriumSpec`.

        An equilibrium carries the total pressure; the thermal part is
        ``p - |B|^2 / 2``.
        """
        q = spec.p.with_values(spec.p.values - 0.5 * spec.B.norm_squared(), "p")
        return cls(rho, spec.u, spec.B, q, 2)

    @property
    def grid(self):
        return self.q.grid

    def total_pressure(self):
        return self.q.values + 0.5 * sum(c * c for c in _components(self.B, self.d))

    def boundary_defects(self):
        """Max total pressure and max normal components of ``rho u`` and B on the boundary."""
        g = self.grid
        rho = _density(self.rho, g)
        p = self.total_pressure()
        if isinstance(g, PolarGrid):
            nx, ny = _outer_normal(g)
            un = [(c[0][-1] * nx + c[1][-1] * ny) for c in (_components(self.u, 2), _components(self.B, 2))]
            return {"pressure": float(np.max(np.abs(p[-1]))),
                    "flow_normal": float(np.max(np.abs(rho[-1] * un[0]))),
                    "field_normal": float(np.max(np.abs(un[1])))}
        edges = [(np.s_[0, :], 0), (np.s_[-1, :], 0), (np.s_[:, 0], 2), (np.s_[:, -1], 2)]
        flows, fields, press = [], [], []
        uc, bc = _components(self.u, 3), _components(self.B, 3)
        for sl, axis in edges:
            press.append(np.max(np.abs(p[sl])))
            flows.append(np.max(np.abs(rho[sl] * uc[axis][sl])))
            fields.append(np.max(np.abs(bc[axis][sl])))
        return {"pressure": float(max(press)), "flow_normal": float(max(flows)), "field_normal": float(max(fields))}


def _integrate(values, grid):
    if isinstance(grid, PolarGrid):
        return disk_integral(values, grid)
    return rz_integral(values, grid, jacobian=True)


def virial_check(inp, tol=BOUNDARY_TOL):
    """Virial balance of an equilibrium confined by zero total pressure.

    ``combined = int (d q + (d/2 - 1)|B|^2 + rho |u|^2)`` and, for each
    Cartesian axis j, ``per_axis[j] = int (p - B_j^2 + rho u_j^2)``. Both
    vanish when the boundary carries no total pressure and no normal
    flux. In three dimensions the axisymmetric x and y integrals each take
    half of the in-plane ``r``/``phi`` energy.

    The report also gives ``relative`` (combined over ``int |q|``),
    ``closure`` (combined minus the sum of the per-axis values, zero up to
    rounding), the boundary defects and the range of q.
    """
    g = inp.grid
    d = inp.d
    rho = _density(inp.rho, g)
    q = inp.q.values
    uc, bc = _components(inp.u, d), _components(inp.B, d)
    b2 = sum(c * c for c in bc)
    u2 = sum(c * c for c in uc)
    p = q + 0.5 * b2
    combined = _integrate(d * q + (0.5 * d - 1.0) * b2 + rho * u2, g)
    if isinstance(g, RZGrid):
        plane_b = bc[0] ** 2 + bc[1] ** 2
        plane_u = uc[0] ** 2 + uc[1] ** 2
        per_axis = [_integrate(p - 0.5 * plane_b + 0.5 * rho * plane_u, g)] * 2
        per_axis.append(_integrate(p - bc[2] ** 2 + rho * uc[2] ** 2, g))
    else:
        per_axis = [_integrate(p - b * b + rho * v * v, g) for b, v in zip(bc, uc)]
    scale = _integrate(np.abs(q), g)
    relative = abs(combined) / scale if scale > 0 else abs(combined)
    defects = inp.boundary_defects()
    metrics = {
        "combined": combined,
        "per_axis": per_axis,
        "closure": combined - sum(per_axis),
        "relative": relative,
        "abs_q_integral": scale,
        "q_min": float(q.min()),
        "q_max": float(q.max()),
        "boundary": defects,
        "dimension": d,
    }
    flags = {
        "boundary_conditions": all(v <= tol for v in defects.values()),
        "identity": relative <= tol,
    }
    return Report("virial", metrics, flags, {"grid": repr(g), "d": d, "tol": tol})


# ----------------------------------------------------------------- Serrin

def _boundary_gradient(A, boundary):
    if boundary is None:
        gx, gy = d_x(A)[-1], d_y(A)[-1]
        return np.hypot(gx, gy)
    pts = np.asarray(boundary, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise PreconditionError("boundary must be an (n, 2) array of (x, y) points")
    gx, gy = PolarInterpolator(A).gradient(pts[:, 0], pts[:, 1])
    return np.hypot(gx, gy)


def serrin_check(A, boundary=None, *, threshold=RIGIDITY_THRESHOLD, dirichlet_tol=BOUNDARY_TOL):
    """Uniformity of ``|d_n A|`` along the boundary.

    Parameters
    ----------
    A : ScalarField on a PolarGrid
        Must vanish on the outer ring (disk or ellipse).
    boundary : (n, 2) array, optional
        Points at which to sample the gradient. The default is the outer
        ring of the grid, where ``|d_n A| = |grad A|``.
    threshold : float
        Relative variation above which ``rigidity_violation`` is set.

    Returns
    -------
    Report
        ``neumann_mean``; ``neumann_variation``, the range
        ``(max - min) / |mean|``; ``max_deviation``,
        ``max |g - mean| / |mean|``; and the flag ``sign_constant``, which
        tells whether A keeps one sign inside.
    """
    if not isinstance(A, ScalarField) or not isinstance(A.grid, PolarGrid):
        raise PreconditionError("serrin_check needs a ScalarField on a PolarGrid")
    edge = float(np.max(np.abs(A.boundary_values())))
    if edge > dirichlet_tol * max(1.0, A.max_abs()):
        raise PreconditionError(f"A does not vanish on the boundary (max |A| = {edge:.3e})")
    g = _boundary_gradient(A, boundary)
    mean = float(np.mean(g))
    if mean == 0.0:
        raise PreconditionError("|d_n A| vanishes identically on the boundary")
    variation = float((g.max() - g.min()) / abs(mean))
    deviation = float(np.max(np.abs(g - mean)) / abs(mean))
    inner = A.values[:-1]
    floor = 1e-12 * A.max_abs()
    sign_constant = bool(np.all(inner > -floor) or np.all(inner < floor))
    metrics = {"neumann_mean": mean, "neumann_variation": variation, "max_deviation": deviation,
               "neumann_min": float(g.min()), "neumann_max": float(g.max()), "n_samples": int(g.size)}
    flags = {"sign_constant": sign_constant, "theorem_applicable": sign_constant,
             "rigidity_violation": variation > threshold}
    return Report("serrin", metrics, flags, {"grid": repr(A.grid), "threshold": threshold})


# ----------------------------------------------------------------- free-boundary audit

def _arcs(mask, theta):
    """Contiguous runs of True in a periodic mask, as ``[theta_start, theta_end]`` pairs."""
    if not np.any(mask):
        return []
    if np.all(mask):
        return [[float(theta[0]), float(theta[-1])]]
    start = int(np.argmin(mask))          # a False entry; roll so runs do not wrap
    m = np.roll(mask, -start)
    t = np.roll(theta, -start)
    edges = np.flatnonzero(np.diff(np.concatenate([[0], m.astype(int), [0]])))
    return [[float(t[a]), float(t[b - 1])] for a, b in zip(edges[::2], edges[1::2])]


def free_boundary_audit(spec, B_ext_boundary=None, *, marginal_tol=1e-12):
    """Pressure balance on the boundary circle and the external field it calls for.

    The residual is ``(G'(0)^2 - 1) |d_n A|^2 / 2 - H(0) + |B_ext|^2 / 2``,
    which is minus the total pressure plus the external magnetic pressure.
    Solving for the external field gives
    ``f^2 = 2 H(0) + (1 - G'(0)^2) |d_n A|^2``. Where ``f^2`` is negative
    no external vacuum field can hold the boundary and the arc is
    reported.

    Parameters
    ----------
    spec : EquilibriumSpec
    B_ext_boundary : float or array over the grid angles, optional
        Strength of the external field on the boundary; zero by default.

    Returns
    -------
    Report
        Metrics ``residual_max``, ``required_f_min``/``max``, the solvability
        ``condition`` (``"satisfied"``, ``"marginal"`` or ``"violated"``),
        ``violating_arcs``; the required f itself (a FourierSeries, NaN-free
        only when the condition holds) is in ``report.extra["required_f"]``.
    """
    grid = spec.grid
    theta = grid.theta
    if hasattr(spec, "boundary_normal_derivative") and spec.A_profile is not None:
        dn = np.full(theta.shape, spec.boundary_normal_derivative())
    else:
        dn = np.hypot(d_x(spec.A)[-1], d_y(spec.A)[-1])
    gp0 = float(spec.G(0.0, 1))
    H0 = float(spec.H(0.0))
    b_ext = np.zeros_like(theta) if B_ext_boundary is None else np.broadcast_to(
        np.asarray(B_ext_boundary, dtype=float), theta.shape)
    residual = 0.5 * (gp0 ** 2 - 1.0) * dn ** 2 - H0 + 0.5 * b_ext ** 2
    f_sq = 2.0 * H0 + (1.0 - gp0 ** 2) * dn ** 2
    scale = max(1.0, float(np.max(np.abs(dn))) ** 2, abs(H0))
    bad = f_sq < -marginal_tol * scale
    if np.any(bad):
        condition = "violated"
    elif np.any(np.abs(f_sq) <= marginal_tol * scale):
        condition = "marginal"
    else:
        condition = "satisfied"
    required = np.sqrt(np.where(bad, np.nan, np.maximum(f_sq, 0.0)))
    extra = {"theta": theta, "residual": residual, "required_f_samples": required}
    if not np.any(bad):
        extra["required_f"] = fourier_analyze(required, (theta.size - 1) // 2).trimmed(1e-15)
    metrics = {
        "residual_max": float(np.max(np.abs(residual))),
        "required_f_min": float(np.nanmin(required)) if not np.all(bad) else float("nan"),
        "required_f_max": float(np.nanmax(required)) if not np.all(bad) else float("nan"),
        "H0": H0,
        "G_prime_0": gp0,
        "normal_derivative_mean": float(np.mean(dn)),
        "condition": condition,
        "violating_arcs": _arcs(bad, theta),
    }
    flags = {"solvable": condition != "violated"}
    return Report("free_boundary_audit", metrics, flags,
                  {"grid": repr(grid), "B_ext": b_ext, "H0": H0, "G_prime_0": gp0}, extra)


# ----------------------------------------------------------------- end to end

def stellarator_loop(spec, coil_curve=2.0, *, tol=1e-6, n_probe=256):
    """Audit an equilibrium, design the coil it needs, and re-audit with that coil.

    Parameters
    ----------
    spec : EquilibriumSpec
        Fixed-boundary equilibrium on the unit disk.
    coil_curve : float, FourierSeries or Curve
        Where the current sheet goes. A number is a circle of that radius
        (closed-form density); anything else is treated as a perturbed
        circle and solved by Neumann series.

    Returns
    -------
    Report
        ``total_residual`` is the largest of the coil's Dirichlet and
        Neumann mismatches and the re-audited pressure-balance residual
        with ``|B_ext| = |grad a|`` taken from the coil's field on the
        boundary.
    """
    audit = free_boundary_audit(spec)
    if audit.metrics["condition"] == "violated":
        return Report("stellarator_loop", {"audit": audit.metrics, "total_residual": float("inf")},
                      {"solvable": False, "closed": False}, audit.inputs)
    f = audit.extra["required_f"]
    if np.isscalar(coil_curve):
        coil, route = design_coil_spectral(f, float(coil_curve)), "spectral"
        state = None
    else:
        curve = coil_curve if isinstance(coil_curve, Curve) else Curve(coil_curve)
        coil, state = design_coil_perturbed(f, curve)
        route = "perturbed"
    potential = exterior_potential(coil, 2 * np.pi * f.mean)
    check = verify_coil(potential, f, n_probe=n_probe, tol=tol)
    theta = spec.grid.theta
    gx, gy = potential.gradient(np.exp(1j * theta))
    b_ext = np.hypot(gx, gy)
    closed = free_boundary_audit(spec, b_ext)
    total = max(check["dirichlet"], check["neumann"], closed.metrics["residual_max"])
    metrics = {
        "route": route,
        "audit_residual_without_coil": audit.metrics["residual_max"],
        "audit_residual_with_coil": closed.metrics["residual_max"],
        "dirichlet": check["dirichlet"],
        "neumann": check["neumann"],
        "monopole": check["monopole"],
        "required_f_mean": float(f.mean),
        "coil_k_max": int(coil.k_max),
        "total_residual": float(total),
    }
    if state is not None:
        metrics["neumann_series"] = state.to_json()
    flags = {"solvable": True, "closed": total < tol}
    return Report("stellarator_loop", metrics, flags,
                  {"audit": audit.inputs, "coil": coil.to_json(), "tol": tol}, {"coil": coil, "potential": potential})

