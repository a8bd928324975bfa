import json

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from gsforge.axisym import build_fields_phi_independent
from gsforge.core import FourierSeries, PolarGrid, Profile, RZGrid, ScalarField, VectorField, solve_poisson
from gsforge.diagnostics import (
    VirialInput, free_boundary_audit, serrin_check, stellarator_loop, virial_check,
)
from gsforge.equilibrium import build_radial_equilibrium
from gsforge.errors import PreconditionError

PARABOLA = Profile.polynomial([0.5, 0.0, -0.5])


@pytest.fixture(scope="module")
def static():
    return build_radial_equilibrium(PARABOLA, Profile.constant(0.0), n_r=96, n_theta=96)


# ----------------------------------------------------------------- virial

def test_static_virial_vanishes_and_q_changes_sign(static):
    rep = virial_check(VirialInput.from_equilibrium(static))
    assert abs(rep["combined"]) < 1e-8 * rep["abs_q_integral"]
    assert rep["q_min"] < 0 < rep["q_max"]
    assert rep.passed


def test_static_virial_against_radial_quadrature():
    """q = p - r^2/2 with p from p' = -B^2/r; its disk integral by scipy quad."""
    def p(r):
        return quad(lambda s: s, r, 1.0)[0]          # -int_r^1 (-s^2/s) ds

    val = 2 * np.pi * quad(lambda r: 2 * (p(r) - 0.5 * r * r) * r, 0, 1)[0]
    assert abs(val) < 1e-12


@pytest.mark.parametrize("kappa", [0.0, 0.5, 0.9])
def test_flow_virial(kappa):
    spec = build_radial_equilibrium(PARABOLA, Profile.linear(kappa), n_r=96, n_theta=96)
    rep = virial_check(VirialInput.from_equilibrium(spec))
    assert rep["relative"] < 1e-8 and rep["boundary"]["pressure"] < 1e-12


def test_virial_zero_fields():
    g = PolarGrid.disk(16, 16)
    z = np.zeros(g.shape)
    v = VectorField(g, {"r": z, "theta": z})
    rep = virial_check(VirialInput(1.0, v, v, ScalarField(g, z)))
    assert rep["combined"] == 0.0 and rep["per_axis"] == [0.0, 0.0]


def test_virial_flags_pressure_on_boundary():
    spec = build_radial_equilibrium(PARABOLA, Profile.constant(0.0), n_r=48, n_theta=48, p_boundary=0.2)
    rep = virial_check(VirialInput.from_equilibrium(spec))
    assert not rep["boundary_conditions"] and not rep["identity"]
    # the defect is the boundary term p_b * oint x.n = 2 |Omega| p_b
    assert rep["combined"] == pytest.approx(2 * np.pi * 0.2, rel=1e-10)


@pytest.mark.parametrize("d", [2, 3])
def test_per_axis_sum_is_combined_symbolically(d):
    q, rho = sp.symbols("q rho")
    B = sp.symbols(f"B1:{d + 1}")
    u = sp.symbols(f"u1:{d + 1}")
    b2 = sum(b * b for b in B)
    u2 = sum(v * v for v in u)
    p = q + b2 / 2
    per_axis = sum(p - b * b + rho * v * v for b, v in zip(B, u))
    combined = d * q + (sp.Rational(d, 2) - 1) * b2 + rho * u2
    assert sp.expand(per_axis - combined) == 0


def test_per_axis_closure_numerically(static):
    rep = virial_check(VirialInput.from_equilibrium(static, rho=2.0))
    assert abs(rep["closure"]) < 1e-14


def test_virial_axisymmetric_closure():
    g = RZGrid.uniform((0.5, 1.5), (-0.5, 0.5), 33, 33)
    A = ScalarField.from_function(g, lambda r, z: (r - 1) ** 2 + z ** 2)
    u, B = build_fields_phi_independent(A, 0.3, 0.0, 0.0)
    q = ScalarField.from_function(g, lambda r, z: np.cos(r) * z)
    rep = virial_check(VirialInput(1.0, u, B, q, d=3))
    assert abs(rep["closure"]) < 1e-12 * abs(rep["combined"]) + 1e-14
    with pytest.raises(PreconditionError):
        VirialInput(1.0, u, B, q, d=2)


# ----------------------------------------------------------------- Serrin

def ellipse_solution(a=1.1, b=1.0, n=128):
    g = PolarGrid.disk(n, n, scale=(a, b))
    return solve_poisson(ScalarField(g, np.full(g.shape, -2.0)))


def test_serrin_radial_disk(static):
    rep = serrin_check(static.A)
    assert rep["neumann_variation"] < 1e-8 and rep["sign_constant"] and not rep["rigidity_violation"]


def test_ellipse_solution_matches_closed_form():
    A = ellipse_solution()
    a, b = A.grid.scale
    x, y = A.grid.cartesian()
    exact = (1 - x ** 2 / a ** 2 - y ** 2 / b ** 2) / (a ** -2 + b ** -2)
    assert np.abs(A.values - exact).max() < 1e-10


def test_serrin_ellipse_detects_rigidity_violation():
    rep = serrin_check(ellipse_solution())
    # exact |grad A| on the boundary ranges over [b, a] / (a^-2 + b^-2) * (1/a, 1/b)
    assert rep["neumann_variation"] > 0.05 and rep["rigidity_violation"]
    assert rep["neumann_max"] / rep["neumann_min"] == pytest.approx(1.1, rel=1e-3)


def test_serrin_sign_change():
    g = PolarGrid.disk(48, 64)
    A = ScalarField(g, g.sample_polar(lambda r, t: (1 - r * r) * (r * np.cos(t) - 0.2)))
    assert not serrin_check(A)["sign_constant"]


def test_serrin_requires_dirichlet():
    g = PolarGrid.disk(16, 16)
    with pytest.raises(PreconditionError):
        serrin_check(ScalarField(g, np.ones(g.shape)))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 127))
def test_serrin_rotation_invariant(shift):
    # rotating by whole grid cells permutes the boundary samples
    disk = PolarGrid.disk(64, 128)
    B = ScalarField(disk, disk.sample_polar(lambda r, t: (1 - r * r) * (1 + 0.1 * r ** 3 * np.cos(3 * t))))
    Br = B.with_values(np.roll(B.values, shift, axis=1))
    assert abs(serrin_check(B)["neumann_variation"] - serrin_check(Br)["neumann_variation"]) < 1e-10


def test_serrin_at_given_points(static):
    t = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    rep = serrin_check(static.A, np.column_stack([np.cos(t), np.sin(t)]))
    assert rep["neumann_variation"] < 1e-6 and rep["neumann_mean"] == pytest.approx(1.0, rel=1e-6)


# ----------------------------------------------------------------- audit

def test_audit_no_coil_disk_equilibrium(static):
    rep = free_boundary_audit(static)
    # H(0) = -|d_n A|^2 / 2 here, so the boundary balances with no external field
    assert rep["H0"] == pytest.approx(-0.5, abs=1e-12)
    assert rep["residual_max"] < 1e-12 and rep["condition"] == "marginal"


def test_audit_required_field_substitutes_back():
    spec = build_radial_equilibrium(PARABOLA, Profile.linear(0.3), n_r=48, n_theta=48, p_boundary=0.4)
    rep = free_boundary_audit(spec)
    f = rep.extra["required_f_samples"]
    assert rep["condition"] == "satisfied" and np.allclose(f, np.sqrt(0.8))
    assert free_boundary_audit(spec, f)["residual_max"] < 1e-14


def test_audit_reports_violating_arc():
    spec = build_radial_equilibrium(PARABOLA, Profile.constant(0.0), n_r=32, n_theta=32, p_boundary=-0.1)
    rep = free_boundary_audit(spec)
    assert rep["condition"] == "violated" and not rep["solvable"]
    assert rep["violating_arcs"] == [[0.0, float(spec.grid.theta[-1])]]
    assert "required_f" not in rep.extra


def test_audit_alfvenic_case():
    """G' = 1: the flux term drops out and the residual is |B_ext|^2/2 - H(0)."""
    spec = build_radial_equilibrium(PARABOLA, Profile.linear(1.0), n_r=32, n_theta=32, p_boundary=0.25)
    rep = free_boundary_audit(spec, 0.3)
    assert rep["residual_max"] == pytest.approx(abs(0.045 - spec.H(0.0)), abs=1e-12)


def test_audit_json_schema(static):
    out = json.loads(free_boundary_audit(static).dumps())
    assert set(out) == {"check", "inputs_hash", "metrics", "flags"}
    assert out == json.loads(free_boundary_audit(static).dumps())


# ----------------------------------------------------------------- end to end

@pytest.mark.parametrize("coil", [2.0, FourierSeries(np.array([0.025, 2.0, 0.025]))])
def test_stellarator_loop_closes(coil):
    spec = build_radial_equilibrium(PARABOLA, Profile.linear(0.3), n_r=48, n_theta=64, p_boundary=0.3)
    rep = stellarator_loop(spec, coil)
    assert rep["closed"] and rep["total_residual"] < 1e-6
    assert rep["audit_residual_without_coil"] > 0.1


def test_stellarator_loop_unsolvable():
    spec = build_radial_equilibrium(PARABOLA, Profile.constant(0.0), n_r=32, n_theta=32, p_boundary=-0.1)
    rep = stellarator_loop(spec)
    assert not rep["solvable"] and not rep["closed"]
