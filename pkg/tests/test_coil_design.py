import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gsforge.core import FourierSeries
from gsforge.coil_design import (
    CoilSheet, Curve, analyticity_radius, design_coil_levelset, design_coil_perturbed,
    design_coil_spectral, exterior_potential, newton_gradient, newton_potential, verify_coil,
)
from gsforge.errors import (
    ConvergenceError, DomainError, NearSingularError, NeumannDivergenceError, PreconditionError,
)

COS = FourierSeries.cosine(1)


def quad_newton(coil, z):
    """Oracle: adaptive Gauss-Kronrod quadrature of the log kernel, independent of the trapezoid rule."""
    def integrand(t):
        zeta = coil.curve.zeta(t)
        return np.log(abs(z - zeta)) * coil.density(t) * coil.curve.speed(t) / (2 * np.pi)

    return quad(integrand, 0, 2 * np.pi, epsabs=1e-12, epsrel=1e-12, limit=400)[0]


def quad_taylor(coil, k):
    def part(t, fn):
        val = coil.curve.zeta(t) ** (-k) * coil.density(t) * coil.curve.speed(t)
        return fn(val)

    re = quad(part, 0, 2 * np.pi, args=(np.real,), epsabs=1e-13, limit=400)[0]
    im = quad(part, 0, 2 * np.pi, args=(np.imag,), epsabs=1e-13, limit=400)[0]
    return (re + 1j * im) / (2 * np.pi * k)


# ---------------------------------------------------------------- curves

def test_curve_must_enclose_unit_disk():
    with pytest.raises(PreconditionError, match="outside the unit circle"):
        Curve(FourierSeries.from_modes({0: 2.0, 1: 0.95}))
    with pytest.raises(PreconditionError):
        Curve.circle(1.0)


def test_curve_speed_matches_derivative():
    c = Curve(FourierSeries.from_modes({0: 2.0, 2: 0.1j}))
    th = np.linspace(0, 2 * np.pi, 50)
    h = 1e-6
    fd = (c.zeta(th + h) - c.zeta(th - h)) / (2 * h)
    assert np.allclose(fd, c.dzeta(th), atol=1e-8)
    assert np.allclose(np.abs(fd), c.speed(th), atol=1e-8)


def test_coil_json_round_trip():
    coil = design_coil_spectral(FourierSeries.from_modes({0: 1.0, 2: 0.3 - 0.1j}), 1.7)
    obj = json.loads(json.dumps(coil.to_json()))
    assert obj["convention"] == "n = -e_r"
    back = CoilSheet.from_json(obj)
    assert back.density == coil.density and back.curve.radius == coil.curve.radius


def test_coil_csv_columns():
    lines = design_coil_spectral(COS, 2.0).to_csv(8).splitlines()
    assert lines[0] == "theta,x,y,j" and len(lines) == 9
    th, x, y, j = map(float, lines[1].split(","))
    assert (th, x, y) == (0.0, 2.0, 0.0) and j == pytest.approx(-1.0)


# ---------------------------------------------------------------- spectral design

@pytest.mark.parametrize("R", [1.2, 2.0, 5.0])
def test_cosine_density_independent_of_radius(R):
    coil = design_coil_spectral(COS, R)
    assert coil.density == FourierSeries.cosine(1, -1.0)


def test_cos3_amplified():
    coil = design_coil_spectral(FourierSeries.cosine(3), 2.0)
    assert coil.density.allclose(FourierSeries.cosine(3, -4.0), atol=0)


def test_constant_data_mean_current():
    coil = design_coil_spectral(FourierSeries.constant(1.0), 2.0)
    assert coil.density.coeff(0) == pytest.approx(-0.5)
    assert coil.total_current() == pytest.approx(-2 * np.pi, abs=1e-12)


@pytest.mark.parametrize("R", [1.3, 2.0, 3.5])
@pytest.mark.parametrize("modes", [{1: 0.5}, {0: 1.0, 2: 0.25j}, {0: -0.3, 1: 0.2, 4: 0.1 - 0.05j, 7: 0.01}])
def test_spectral_satisfies_boundary_conditions(R, modes):
    f = FourierSeries.from_modes(modes)
    pot = exterior_potential(design_coil_spectral(f, R), 2 * np.pi * f.mean)
    rep = verify_coil(pot, f)
    assert rep["dirichlet"] < 1e-8
    assert rep["neumann"] < 1e-8
    assert abs(rep["monopole"]) < 1e-10
    assert rep["total_current"] == pytest.approx(-2 * np.pi * f.mean, abs=1e-10)
    assert rep["harmonicity"] < 1e-7


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(1.1, 4.0))
def test_spectral_linearity(alpha, beta, R):
    f = FourierSeries.from_modes({0: 0.3, 1: 1.0, 3: 0.2j})
    g = FourierSeries.from_modes({2: 0.5, 3: -0.1})
    combo = design_coil_spectral(alpha * f + beta * g, R, k_max=3).density
    parts = (alpha * design_coil_spectral(f, R, k_max=3).density
             + beta * design_coil_spectral(g, R, k_max=3).density)
    assert combo.allclose(parts, atol=1e-12 * max(1.0, R ** 2))


def test_spectral_rejects_bad_radius():
    with pytest.raises(PreconditionError, match="exceed 1"):
        design_coil_spectral(COS, 1.0)


def test_spectral_overflow_reports_truncation():
    f = FourierSeries.from_modes({k: 1e-13 for k in range(1, 600)})
    with pytest.raises(PreconditionError, match="required coil resolution"):
        design_coil_spectral(f, 10.0, check_analyticity=False)


def test_spectral_rejects_radius_beyond_decay():
    f = FourierSeries.from_modes({k: 3.0 ** -k for k in range(1, 40)})
    design_coil_spectral(f, 2.5)
    with pytest.raises(PreconditionError, match="decay radius"):
        design_coil_spectral(f, 3.5)


# ---------------------------------------------------------------- Newton potential

def test_newton_mean_value():
    # uniform density on R = 2 with total current 2 pi: N(0) = log 2
    coil = CoilSheet(Curve.circle(2.0), FourierSeries.constant(0.5))
    assert coil.total_current() == pytest.approx(2 * np.pi)
    assert newton_potential(coil, 0.0) == pytest.approx(np.log(2.0), abs=1e-14)


def test_newton_zero_density():
    coil = CoilSheet(Curve.circle(2.0), FourierSeries.constant(0.0))
    assert np.all(newton_potential(coil, np.array([0.3, 5j, -4.0])) == 0.0)


@pytest.mark.parametrize("z", [0.5, 0.3 + 0.6j, -1.0])
def test_newton_series_matches_quadrature(z):
    coil = CoilSheet(Curve(FourierSeries.from_modes({0: 2.0, 1: 0.05, 3: 0.02j})),
                     FourierSeries.from_modes({0: 0.1, 1: -0.5, 2: 0.2j}))
    a = newton_potential(coil, z)
    b = newton_potential(coil, z, method="series")
    assert a == pytest.approx(b, abs=1e-10)
    assert a == pytest.approx(quad_newton(coil, z), abs=1e-11)


def test_taylor_coefficients_match_quad():
    from gsforge.coil_design import taylor_data
    coil = CoilSheet(Curve(FourierSeries.from_modes({0: 2.0, 2: 0.1})), FourierSeries.cosine(1, -1.0))
    _, c = taylor_data(coil)
    for k in (1, 2, 5):
        assert c[k - 1] == pytest.approx(quad_taylor(coil, k), abs=1e-12)


@pytest.mark.parametrize("gap", [1e-1, 1e-2, 1e-3, -1e-3, -1e-2])
def test_newton_accurate_close_to_sheet(gap):
    """j = cos on |z| = 2: N = -(r/2) cos inside and -(2/r) cos outside."""
    coil = CoilSheet(Curve.circle(2.0), FourierSeries.cosine(1))
    th = np.linspace(0, 2 * np.pi, 13)
    r = 2.0 - gap
    exact = -(r / 2 if r < 2 else 2 / r) * np.cos(th)
    assert np.abs(newton_potential(coil, r * np.exp(1j * th)) - exact).max() < 1e-13
    if r < 2:
        gx, gy = newton_gradient(coil, r * np.exp(1j * th))
        assert np.abs(gx + 0.5).max() < 1e-11 and np.abs(gy).max() < 1e-11


def test_newton_near_singular():
    coil = design_coil_spectral(COS, 2.0)
    with pytest.raises(NearSingularError):
        newton_potential(coil, 2.0 + 1e-10j)
    with pytest.raises(DomainError):
        newton_potential(coil, 2.5, method="series")


# ---------------------------------------------------------------- exterior potential

def test_exterior_dirichlet_and_neumann_against_quad_oracle():
    coil = design_coil_spectral(COS, 2.0)
    pot = exterior_potential(coil, 0.0)
    for t in np.linspace(0, 2 * np.pi, 7, endpoint=False):
        z = np.exp(1j * t)
        assert abs(pot(z)) < 1e-10
        # N by adaptive quadrature, the rest from the representation
        direct = pot.c0 - np.real(np.conj(pot.c) @ z ** -np.arange(1, pot.c.size + 1)) - quad_newton(coil, z)
        assert abs(direct) < 1e-10
    th = np.linspace(0, 2 * np.pi, 33)
    assert np.max(np.abs(pot.normal_derivative(th) - np.cos(th))) < 1e-8


def test_exterior_far_gradient_small():
    pot = exterior_potential(design_coil_spectral(COS, 2.0), 0.0)
    gx, gy = pot.gradient(100.0 * np.exp(1j * np.linspace(0, 6, 10)))
    assert np.max(np.hypot(gx, gy)) < 1.5e-4 + 1e-12


def test_exterior_domain_error():
    pot = exterior_potential(design_coil_spectral(COS, 2.0), 0.0)
    with pytest.raises(DomainError):
        pot(0.5)


def test_exterior_gradient_matches_fd():
    coil = design_coil_spectral(FourierSeries.from_modes({0: 1.0, 2: 0.3j}), 1.8)
    pot = exterior_potential(coil, 2 * np.pi)
    z = np.array([1.3 + 0.2j, -0.5 + 1.1j, 3.0 - 2.0j])
    h = 1e-5
    gx, gy = pot.gradient(z)
    assert np.allclose(gx, (pot(z + h) - pot(z - h)) / (2 * h), atol=1e-8)
    assert np.allclose(gy, (pot(z + 1j * h) - pot(z - 1j * h)) / (2 * h), atol=1e-8)


# ---------------------------------------------------------------- verify_coil

def test_verify_negated_sheet():
    coil = design_coil_spectral(COS, 2.0)
    rep = verify_coil(exterior_potential(coil.scaled(-1.0), 0.0), COS)
    assert rep["neumann"] == pytest.approx(2.0, rel=1e-8)
    assert not rep["flags"]["neumann"]


def test_verify_zero_sheet():
    zero = FourierSeries.constant(0.0)
    rep = verify_coil(exterior_potential(CoilSheet(Curve.circle(2.0), zero), 0.0), zero)
    for key in ("dirichlet", "neumann", "far_gradient", "monopole", "harmonicity"):
        assert rep[key] == 0.0


# ---------------------------------------------------------------- perturbed curves

def test_perturbed_on_circle_matches_spectral():
    f = FourierSeries.from_modes({0: 0.4, 1: 1.0, 2: 0.3j})
    sheet, state = design_coil_perturbed(f, Curve.circle(2.0))
    assert sheet.density.allclose(design_coil_spectral(f, 2.0).density, atol=1e-12)
    assert state.operator_norm < 1e-12


def test_perturbed_converges_and_verifies():
    curve = Curve(FourierSeries.from_modes({0: 2.0, 1: 0.025}))
    sheet, state = design_coil_perturbed(COS, curve)
    assert state.iterations <= 50
    assert state.operator_norm < 1
    assert all(b <= a for a, b in zip(state.history, state.history[1:]))
    rep = verify_coil(exterior_potential(sheet, 0.0), COS)
    assert rep["neumann"] < 1e-8 and rep["dirichlet"] < 1e-10


def test_perturbed_general_data():
    f = FourierSeries.from_modes({0: 1.0, 1: 0.2, 3: 0.1j})
    curve = Curve(FourierSeries.from_modes({0: 2.5, 2: 0.03, 3: 0.02j}))
    sheet, _ = design_coil_perturbed(f, curve)
    rep = verify_coil(exterior_potential(sheet, 2 * np.pi), f)
    assert rep["neumann"] < 1e-8
    assert abs(rep["monopole"]) < 1e-10


def test_perturbation_continuity_first_order():
    base = design_coil_spectral(COS, 2.0).density
    diffs = []
    for eps in (0.02, 0.01, 0.005):
        sheet, _ = design_coil_perturbed(COS, Curve(FourierSeries.from_modes({0: 2.0, 1: eps / 2})))
        d = sheet.density - base
        diffs.append(np.sqrt(np.sum(np.abs(d.coeffs) ** 2)))
    ratios = np.array(diffs[:-1]) / np.array(diffs[1:])
    assert np.all(np.abs(ratios - 2.0) < 0.05)


def test_perturbed_divergence_detected_both_ways():
    curve = Curve(FourierSeries.from_modes({0: 2.0, 1: 0.15}))
    with pytest.raises(NeumannDivergenceError) as info:
        design_coil_perturbed(COS, curve)
    assert info.value.operator_norm > 1
    with pytest.raises(ConvergenceError, match="diverged"):
        design_coil_perturbed(COS, curve, enforce_norm=False, max_iter=500)


def test_perturbed_invalid_curve():
    with pytest.raises(PreconditionError):
        design_coil_perturbed(COS, FourierSeries.from_modes({0: 2.0, 1: 0.95}))


# ---------------------------------------------------------------- level-set design

def test_levelset_constant_data_circle():
    res = design_coil_levelset(FourierSeries.constant(1.0), a0=-0.3)
    coil = res.coil
    assert coil.curve.is_circle
    assert coil.curve.mean_radius == pytest.approx(np.exp(0.3), abs=1e-13)
    assert coil.density.mean == pytest.approx(-np.exp(-0.3), abs=1e-13)


def test_levelset_non_circular_verifies():
    f = FourierSeries.from_modes({0: 1.0, 1: 0.1})
    coil, A_ext = design_coil_levelset(f)
    assert not coil.curve.is_circle
    rep = verify_coil((coil, A_ext), f)
    assert rep["dirichlet"] < 1e-6 and rep["neumann"] < 1e-6
    assert rep["field_mismatch"] < 1e-6
    assert rep["total_current"] == pytest.approx(-2 * np.pi, abs=1e-8)


def test_levelset_rejects_sign_change():
    with pytest.raises(PreconditionError, match="f > 0"):
        design_coil_levelset(FourierSeries.from_modes({0: 0.1, 1: 0.5}))


def test_levelset_rejects_level_outside_collar():
    f = FourierSeries.constant(1.0)
    with pytest.raises(PreconditionError, match="collar"):
        design_coil_levelset(f, a0=0.1)
    with pytest.raises(PreconditionError, match="collar"):
        design_coil_levelset(f, a0=-5.0)


def test_levelset_field_is_clipped_continuation():
    f = FourierSeries.from_modes({0: 1.0, 2: 0.1})
    res = design_coil_levelset(f, a0=-0.2)
    assert np.min(res.A_ext.values) == -0.2
    assert np.all(res.A_ext.boundary_values() == -0.2)
    assert res.contour_deviation < 1e-3


# ---------------------------------------------------------------- sharpness

def test_sharpness_point_current():
    z0 = 3.0

    def field(t):
        z = np.exp(1j * t)
        return -np.real(z * np.conj(z - z0)) / np.abs(z - z0) ** 2 / (2 * np.pi)

    rho, quality = analyticity_radius(FourierSeries.from_function(field, 64, 512))
    assert 2.85 <= rho <= 3.15 and quality > 0.99


def test_sharpness_entire():
    est = analyticity_radius(FourierSeries.from_function(lambda t: np.cos(t) + 0.1 * np.sin(4 * t), 64))
    assert est.rho == np.inf and est.flag == "entire"


def test_sharpness_polynomial_decay():
    est = analyticity_radius(FourierSeries.from_modes({k: 1 / k ** 2 for k in range(1, 65)}))
    assert est.flag == "no exterior coil exists"
    assert est.rho == 1.0 and est.fit_quality < 0.95


def test_sharpness_too_few_modes():
    with pytest.raises(PreconditionError, match="noise floor"):
        analyticity_radius(FourierSeries.from_modes({1: 1.0, 2: 0.5}))
