"""scikit-learn style wrappers around the functional API.

Only the pieces that genuinely learn something from data take this form:

* :class:`StructureFunctionRegressor` fits ``psi = G(A)`` from paired samples.
* :class:`CoilDesigner` fits a current sheet to boundary data and predicts
  the exterior potential it produces.
* :class:`AnalyticityRadiusEstimator` fits the geometric decay rate of a
  Fourier spectrum and predicts which coil radii are admissible.
* :class:`GradShafranovDiskSolver` solves for A once and predicts it at
  arbitrary points.

Each stores its fitted state in trailing-underscore attributes, validates
inputs with :func:`sklearn.utils.check_array`, and supports ``get_params`` /
``set_params`` / ``clone``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .coil_design import (
    Curve, analyticity_radius, design_coil_levelset, design_coil_perturbed, design_coil_spectral,
    exterior_potential, verify_coil,
)
from .core.fourier import FourierSeries, fourier_analyze
from .core.grid import PolarGrid
from .core.interp import PolarInterpolator
from .core.profile import Profile
from .equilibrium import solve_gs_disk
from .errors import PreconditionError
from .reconstruction import _bin_fit

__all__ = ["StructureFunctionRegressor", "CoilDesigner", "AnalyticityRadiusEstimator",
           "GradShafranovDiskSolver", "boundary_series"]


def boundary_series(X, k_max=None):
    """Turn boundary data into a FourierSeries.

    ``X`` may already be a FourierSeries, or samples of f at ``n`` equally
    spaced angles starting at 0 (shape ``(n,)`` or ``(n, 1)``).
    """
    if isinstance(X, FourierSeries):
        return X
    samples = check_array(X, ensure_2d=False).ravel()
    if samples.size < 3:
        raise PreconditionError("need at least three boundary samples")
    K = (samples.size - 1) // 2 if k_max is None else int(k_max)
    return fourier_analyze(samples, K).trimmed(1e-15)


def _as_profile(p):
    if isinstance(p, Profile):
        return p
    if isinstance(p, str):
        return Profile.from_expr(p)
    if np.isscalar(p):
        return Profile.constant(float(p))
    raise PreconditionError(f"cannot use {p!r} as a profile")


class StructureFunctionRegressor(RegressorMixin, BaseEstimator):
    """Learn ``psi = G(A)`` by binned cubic-spline fitting.

    Parameters
    ----------
    n_bins : int
        Bins over the range of A; one representative sample per bin becomes
        a spline knot.

    Attributes
    ----------
    profile_ : Profile
    spread_ : float
        Largest within-bin scatter of ``psi - G(A)``. Zero up to rounding
        when psi really is a function of A.
    """

    def __init__(self, n_bins=128):
        self.n_bins = n_bins

    def fit(self, X, y):
        X = check_array(X, ensure_2d=False)
        a = X.ravel() if X.ndim == 1 or X.shape[1] == 1 else None
        if a is None:
            raise PreconditionError("X must hold a single feature (the values of A)")
        y = check_array(y, ensure_2d=False).ravel()
        if y.size != a.size:
            raise PreconditionError(f"X has {a.size} samples but y has {y.size}")
        rec = _bin_fit(a, y, int(self.n_bins))
        self.profile_, self.spread_, self.knots_ = rec.profile, rec.spread, rec.knots
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "profile_")
        a = check_array(X, ensure_2d=False).ravel()
        return self.profile_(a)


class CoilDesigner(BaseEstimator):
    """Design a current sheet reproducing Neumann data f on the unit circle.

    Parameters
    ----------
    method : {"spectral", "perturbed", "levelset"}
    radius : float
        Circle radius for ``"spectral"``.
    curve : FourierSeries or Curve, optional
        Coil shape for ``"perturbed"``.
    a0 : float, optional
        Cut-off level for ``"levelset"``.
    tol, max_iter
        Neumann-series controls.

    Attributes
    ----------
    f_ : FourierSeries
    sheet_ : CoilSheet
    potential_ : ExteriorPotential
    report_ : dict
        Output of :func:`~gsforge.coil_design.verify_coil`.
    """

    def __init__(self, method="spectral", radius=2.0, curve=None, a0=None, tol=1e-13, max_iter=50):
        self.method = method
        self.radius = radius
        self.curve = curve
        self.a0 = a0
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        f = boundary_series(X)
        if self.method == "spectral":
            sheet = design_coil_spectral(f, self.radius)
        elif self.method == "perturbed":
            if self.curve is None:
                raise PreconditionError("method='perturbed' needs a curve")
            curve = self.curve if isinstance(self.curve, Curve) else Curve(self.curve)
            sheet, self.state_ = design_coil_perturbed(f, curve, self.tol, self.max_iter)
        elif self.method == "levelset":
            sheet = design_coil_levelset(f, self.a0).coil
        else:
            raise PreconditionError(f"unknown method {self.method!r}")
        self.f_ = f
        self.sheet_ = sheet
        self.potential_ = exterior_potential(sheet, 2 * np.pi * f.mean)
        self.report_ = verify_coil(self.potential_, f)
        return self

    def predict(self, X):
        """Exterior potential at points ``X`` of shape ``(n, 2)`` with ``|z| >= 1``."""
        check_is_fitted(self, "potential_")
        X = check_array(X)
        if X.shape[1] != 2:
            raise PreconditionError("points must have shape (n, 2)")
        return self.potential_(X[:, 0] + 1j * X[:, 1])

    def score(self, X, y=None):
        """Negative max Neumann mismatch of the fitted coil against ``X``; 0 is perfect."""
        check_is_fitted(self, "potential_")
        return -verify_coil(self.potential_, boundary_series(X))["neumann_analytic"]


class AnalyticityRadiusEstimator(BaseEstimator):
    """Geometric decay radius of a spectrum.

    Attributes
    ----------
    rho_ : float
        Decay radius (``inf`` for trigonometric polynomials).
    fit_quality_ : float
    flag_ : str
    """

    def __init__(self, noise_floor=1e-14, min_modes=8):
        self.noise_floor = noise_floor
        self.min_modes = min_modes

    def fit(self, X, y=None):
        est = analyticity_radius(boundary_series(X), noise_floor=self.noise_floor, min_modes=self.min_modes)
        self.estimate_ = est
        self.rho_, self.fit_quality_, self.flag_ = est.rho, est.fit_quality, est.flag
        return self

    def predict(self, R):
        """Whether a circular coil of each radius in ``R`` can reproduce the data."""
        check_is_fitted(self, "estimate_")
        R = check_array(R, ensure_2d=False).ravel()
        return np.array([self.estimate_.feasible(r) for r in R])


class GradShafranovDiskSolver(RegressorMixin, BaseEstimator):
    """Fixed-boundary solve of ``(1 - G'^2) Lap A - G'G''|grad A|^2 = F(A)`` on the disk.

    ``fit`` ignores its data arguments (the problem is fully specified by the
    profiles) and solves once; ``predict`` interpolates A at ``(x, y)``
    points with a bicubic spline.
    """

    def __init__(self, G="0", F="-2", n_r=128, n_theta=128, tol=1e-10, max_iter=200):
        self.G = G
        self.F = F
        self.n_r = n_r
        self.n_theta = n_theta
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X=None, y=None):
        grid = PolarGrid.disk(int(self.n_r), int(self.n_theta))
        A, info = solve_gs_disk(_as_profile(self.G), _as_profile(self.F), grid, tol=self.tol,
                                max_iter=self.max_iter, return_info=True)
        self.A_, self.info_ = A, info
        self._interp = PolarInterpolator(A)
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "A_")
        X = check_array(X)
        if X.shape[1] != 2:
            raise PreconditionError("points must have shape (n, 2)")
        return self._interp(X[:, 0], X[:, 1])
