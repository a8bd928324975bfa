"""Numerical substrate: Fourier series, grids, operators, quadrature, special functions."""

from .contour import Contour, line_integral_level, trace_level
from .elliptic import elliptic_E, elliptic_K, elliptic_KE
from .fourier import FourierSeries, fourier_analyze
from .grid import PolarGrid, RZGrid, ScalarField, VectorField
from .interp import PolarInterpolator
from .ops import (
    curl_z, d_r, d_rr, d_theta, d_thetatheta, d_x, d_y, divergence, gradient,
    laplacian, perp_gradient, poisson_bracket, solve_poisson,
)
from .profile import Profile
from .quadrature import disk_integral, radial_weights, rz_integral

__all__ = [
    "Contour", "FourierSeries", "PolarGrid", "PolarInterpolator", "Profile", "RZGrid",
    "ScalarField", "VectorField", "curl_z", "d_r", "d_rr", "d_theta", "d_thetatheta",
    "d_x", "d_y", "disk_integral", "divergence", "elliptic_E", "elliptic_K", "elliptic_KE",
    "fourier_analyze", "gradient", "laplacian", "line_integral_level", "perp_gradient",
    "poisson_bracket", "radial_weights", "rz_integral", "solve_poisson", "trace_level",
]
