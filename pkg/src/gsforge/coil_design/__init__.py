"""Exterior current-sheet design for holding a plasma boundary steady.

Conventions used throughout: the boundary normal derivative is ``-d_r`` on
the unit circle, and a sheet with density j enters as ``Lap a = -j delta``.
"""

from .curve import CoilSheet, Curve, NORMAL_CONVENTION
from .levelset import HarmonicContinuation, LevelSetCoil, design_coil_levelset
from .perturbed import NeumannSeriesState, design_coil_perturbed, perturbation_operator
from .potential import ExteriorPotential, exterior_potential, newton_gradient, newton_potential, taylor_data
from .sharpness import AnalyticityEstimate, analyticity_radius
from .spectral import design_coil_spectral
from .verify import verify_coil

__all__ = [
    "Curve", "CoilSheet", "NORMAL_CONVENTION",
    "design_coil_spectral", "design_coil_perturbed", "design_coil_levelset",
    "NeumannSeriesState", "perturbation_operator", "HarmonicContinuation", "LevelSetCoil",
    "ExteriorPotential", "exterior_potential", "newton_potential", "newton_gradient", "taylor_data",
    "verify_coil", "analyticity_radius", "AnalyticityEstimate",
]
