"""Residual checks for a designed coil against its boundary data."""

from __future__ import annotations

import numpy as np

from ..core.fourier import FourierSeries
from ..core.grid import ScalarField
from ..errors import PreconditionError
from .curve import CoilSheet, quadrature_nodes
from .potential import ExteriorPotential, exterior_potential

__all__ = ["verify_coil", "PROBE_RADIUS"]

PROBE_RADIUS = 1e3
FD_STEP = 2e-4

# one-sided five-point first derivative, error O(h^4)
_ONE_SIDED = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
# centred five-point second derivative, error O(h^4)
_SECOND = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _fd_normal(pot, theta, h):
    e = np.exp(1j * theta)
    samples = np.stack([pot((1.0 + m * h) * e) for m in range(5)])
    return -(_ONE_SIDED @ samples) / h


def _fd_laplacian(pot, z, h):
    out = np.zeros(z.shape)
    for m, c in zip(range(-2, 3), _SECOND):
        if c:
            out += c * (pot(z + m * h) + pot(z + 1j * m * h))
    return out / (h * h)


def _harmonic_probes(coil, n):
    th = quadrature_nodes(n)
    R = coil.curve.radius(th)
    inner = 1.0 + 0.5 * (R - 1.0)
    outer = coil.curve.r_max + 0.5 * (R - 1.0) + 0.5
    return np.concatenate([inner * np.exp(1j * th), outer * np.exp(1j * th)]), float(np.min(R - 1.0))


def verify_coil(potential, f, *, n_probe=None, fd_step=FD_STEP, tol=1e-8):
    """Check a coil's field against the three exterior boundary conditions.

    Parameters
    ----------
    potential : ExteriorPotential or (CoilSheet, ScalarField)
        The field to check. A pair is turned into its representation formula
        first, and the sampled field is compared with it inside the coil.
    f : FourierSeries
        Target ``-d_r a`` on the unit circle.
    n_probe : int, optional
        Angles on the unit circle; default is 4x oversampling of the data.

    Returns
    -------
    dict
        ``dirichlet`` (max |a| on the circle), ``neumann`` (max |-d_r a - f|
        from a one-sided fourth-order stencil), ``neumann_analytic`` (same
        from the quadrature gradient), ``far_gradient`` (max |grad a| at
        ``|z| = 1e3``), ``monopole`` (far-field log coefficient),
        ``harmonicity`` (max |Lap a| away from the sheet), ``total_current``
        and boolean ``flags``.
    """
    field_mismatch = None
    if isinstance(potential, tuple):
        coil, A_ext = potential
        if not isinstance(coil, CoilSheet):
            raise PreconditionError("expected (CoilSheet, ScalarField)")
        potential = exterior_potential(coil, 2 * np.pi * f.mean)
        if A_ext is not None:
            field_mismatch = _field_mismatch(potential, A_ext)
    if not isinstance(potential, ExteriorPotential):
        raise PreconditionError("verify_coil needs an ExteriorPotential or (CoilSheet, field) pair")
    if not isinstance(f, FourierSeries):
        raise PreconditionError("boundary data must be a FourierSeries")
    coil = potential.coil
    n = n_probe or max(256, 4 * (2 * max(f.k_max, coil.k_max) + 1))
    th = quadrature_nodes(n)
    on_circle = potential(np.exp(1j * th))
    h = min(fd_step, 0.05 * (coil.curve.r_min - 1.0))
    target = f(th)
    neumann = float(np.max(np.abs(_fd_normal(potential, th, h) - target)))
    neumann_analytic = float(np.max(np.abs(potential.normal_derivative(th) - target)))
    far = PROBE_RADIUS * np.exp(1j * quadrature_nodes(64))
    gx, gy = potential.gradient(far)
    probes, gap = _harmonic_probes(coil, 64)
    lap = _fd_laplacian(potential, probes, min(1e-2, 0.1 * gap))
    report = {
        "dirichlet": float(np.max(np.abs(on_circle))),
        "neumann": neumann,
        "neumann_analytic": neumann_analytic,
        "far_gradient": float(np.max(np.hypot(gx, gy))),
        "probe_radius": PROBE_RADIUS,
        "monopole": float(potential.log_coefficient),
        "harmonicity": float(np.max(np.abs(lap))),
        "total_current": coil.total_current(),
        "f_ave": potential.f_ave,
        "fd_step": h,
        "n_probe": n,
    }
    if field_mismatch is not None:
        report["field_mismatch"] = field_mismatch
    scale = max(1.0, float(np.max(np.abs(target))))
    report["flags"] = {
        "dirichlet": report["dirichlet"] <= tol * scale,
        "neumann": report["neumann"] <= tol * scale,
        "decay": abs(report["monopole"]) <= tol * scale,
    }
    return report


def _field_mismatch(potential, A_ext):
    """Max difference between a sampled field and the formula strictly inside the coil."""
    if not isinstance(A_ext, ScalarField):
        raise PreconditionError("sampled exterior field must be a ScalarField")
    R, T = A_ext.grid.mesh()
    Rc = potential.coil.curve.radius(T)
    inside = (R >= 1.0) & (R < 1.0 + 0.8 * (Rc - 1.0))
    if not np.any(inside):
        return 0.0
    z = R[inside] * np.exp(1j * T[inside])
    return float(np.max(np.abs(A_ext.values[inside] - potential(z))))
