"""gsforge: symmetric MHD equilibria with flow, free boundaries and current-sheet coils.

The functional API lives in the submodules (:mod:`gsforge.equilibrium`,
:mod:`gsforge.coil_design`, :mod:`gsforge.diagnostics`, ...); the most used
entry points are re-exported here. scikit-learn style wrappers are in
:mod:`gsforge.estimators`.
"""

__version__ = "0.1.0"

from .axisym import AxisymSpec, gs_green, gs_residual_phi, gs_residual_z, updown_asymmetry
from .coil_design import (
    CoilSheet, Curve, analyticity_radius, design_coil_levelset, design_coil_perturbed, design_coil_spectral,
    exterior_potential, verify_coil,
)
from .core import FourierSeries, PolarGrid, Profile, RZGrid, ScalarField, VectorField
from .diagnostics import VirialInput, free_boundary_audit, serrin_check, stellarator_loop, virial_check
from .equilibrium import (
    EquilibriumSpec, build_radial_equilibrium, gs_residual, solve_gs_disk, travel_time_field, travel_time_radial,
)
from .reconstruction import reconstruction_report, recover_F, recover_G, recover_H

__all__ = [
    "AxisymSpec", "gs_green", "gs_residual_phi", "gs_residual_z", "updown_asymmetry",
    "CoilSheet", "Curve", "analyticity_radius", "design_coil_levelset", "design_coil_perturbed",
    "design_coil_spectral", "exterior_potential", "verify_coil",
    "FourierSeries", "PolarGrid", "Profile", "RZGrid", "ScalarField", "VectorField",
    "VirialInput", "free_boundary_audit", "serrin_check", "stellarator_loop", "virial_check",
    "EquilibriumSpec", "build_radial_equilibrium", "gs_residual", "solve_gs_disk",
    "travel_time_field", "travel_time_radial",
    "reconstruction_report", "recover_F", "recover_G", "recover_H",
]
