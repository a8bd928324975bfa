"""Closed-form current density for a circular coil."""

from __future__ import annotations

import numpy as np

from ..core.fourier import FourierSeries
from ..errors import PreconditionError
from .curve import CoilSheet, Curve
from .sharpness import NOISE_FLOOR, analyticity_radius

__all__ = ["design_coil_spectral", "circle_density_coefficients"]

OVERFLOW = 1e300


def circle_density_coefficients(f_pos, R):
    """``j_k = -R^(k-1) f_k`` for ``k = 0 .. K`` (non-negative modes only)."""
    k = np.arange(len(f_pos))
    return -np.power(float(R), k - 1.0) * np.asarray(f_pos, dtype=complex)


def design_coil_spectral(f, R, *, k_max=None, check_analyticity=True):
    """Current density on the circle ``|z| = R`` whose field has Neumann data f.

    Each mode is amplified by ``R^(|k|-1)``. The mean mode ``j_0 = -f_0 / R``
    makes the sheet carry total current ``-oint f dl``, which cancels the
    logarithm in the far field.

    Parameters
    ----------
    f : FourierSeries
        Target ``-d_r a`` on the unit circle.
    R : float
        Coil radius, ``R > 1``.
    k_max : int, optional
        Truncation; defaults to the last mode above ``1e-14 max|f_k|``.
    check_analyticity : bool
        For data that is not a trigonometric polynomial, refuse radii at or
        beyond the estimated decay radius of ``f_k``.

    Raises
    ------
    PreconditionError
        ``R <= 1``; amplified modes overflow (the message names the largest
        usable truncation); or R is beyond the decay radius of f.
    """
    R = float(R)
    if not R > 1.0:
        raise PreconditionError(f"coil radius must exceed 1, got {R}")
    if not isinstance(f, FourierSeries):
        raise PreconditionError("boundary data must be a FourierSeries")
    f = f.trimmed(NOISE_FLOOR) if k_max is None else f.truncated(k_max)
    K = f.k_max
    if check_analyticity and K > 0:
        try:
            est = analyticity_radius(f)
        except PreconditionError:
            est = None
        if est is not None and not est.feasible(R):
            raise PreconditionError(
                f"coil radius {R:g} is beyond the decay radius {est.rho:.4g} of the boundary data "
                f"(flag {est.flag!r}); no sheet at this radius reproduces f")
    fp = f.positive()
    with np.errstate(over="ignore", invalid="ignore"):
        jp = circle_density_coefficients(fp, R)
    bad = ~np.isfinite(jp) | (np.abs(jp) > OVERFLOW)
    if np.any(bad):
        first = int(np.argmax(bad))
        raise PreconditionError(
            f"amplified density overflows at mode {first}; required coil resolution "
            f"K_max <= {first - 1} at R = {R:g}")
    coeffs = np.concatenate([np.conj(jp[:0:-1]), jp])
    return CoilSheet(Curve.circle(R), FourierSeries(coeffs))
