import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gsforge.core import (
    FourierSeries, PolarGrid, PolarInterpolator, Profile, ScalarField, VectorField,
    disk_integral, divergence, elliptic_E, elliptic_K, fourier_analyze, laplacian,
    line_integral_level, perp_gradient, poisson_bracket, solve_poisson, trace_level,
)
from gsforge.errors import ContourError, PreconditionError


def uniform_theta(n):
    return 2 * np.pi * np.arange(n) / n


# ---------------------------------------------------------------- Fourier

def test_cosine_single_mode():
    fs = fourier_analyze(np.cos(uniform_theta(64)), 8)
    assert fs.coeff(1) == pytest.approx(0.5, abs=1e-15)
    assert fs.coeff(-1) == pytest.approx(0.5, abs=1e-15)
    others = [abs(fs.coeff(k)) for k in range(-8, 9) if abs(k) != 1]
    assert max(others) < 1e-15


def test_constant_samples():
    fs = fourier_analyze(np.full(16, 3.0), 4)
    assert fs.coeff(0) == 3.0
    assert np.all(np.abs(np.delete(fs.coeffs, 4)) < 1e-15)


def test_exp_cos_against_quadrature_and_bessel():
    fs = fourier_analyze(np.exp(np.cos(uniform_theta(64))), 12)
    for k in range(13):
        direct = quad(lambda t: np.exp(np.cos(t)) * np.cos(k * t), 0, 2 * np.pi, epsabs=1e-13, limit=200)[0] / (2 * np.pi)
        assert fs.coeff(k).real == pytest.approx(direct, abs=1e-13)
        assert fs.coeff(k).real == pytest.approx(sp.iv(k, 1.0), abs=1e-14)


def test_too_few_samples_rejected():
    with pytest.raises(PreconditionError):
        fourier_analyze(np.ones(8), 4)


def test_non_real_coefficients_rejected():
    with pytest.raises(PreconditionError, match="conjugate"):
        FourierSeries([1.0, 0.0, 2.0])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=9))
def test_analyze_evaluate_roundtrip(pairs):
    modes = {k: complex(a, b if k else 0.0) for k, (a, b) in enumerate(pairs)}
    fs = FourierSeries.from_modes(modes)
    n = 4 * fs.k_max + 8
    back = fourier_analyze(fs(uniform_theta(n)), fs.k_max)
    assert back.allclose(fs, atol=1e-12)
    assert np.array_equal(back.coeffs, np.conj(back.coeffs[::-1]))


def test_series_json_roundtrip():
    fs = FourierSeries.from_modes({0: 1.0, 2: 0.3 - 0.1j, 5: 1e-3})
    assert FourierSeries.from_json(fs.to_json()) == fs


def test_derivative_matches_analytic():
    fs = FourierSeries.cosine(3, 2.0)
    t = np.linspace(0, 2 * np.pi, 11)
    assert np.allclose(fs.evaluate(t, derivative=1), -6 * np.sin(3 * t), atol=1e-13)


# ---------------------------------------------------------------- grids and operators

@pytest.fixture(scope="module")
def disk():
    return PolarGrid.disk(64, 128)


def test_disk_grid_excludes_axis(disk):
    assert disk.r[0] > 0 and disk.r[-1] == 1.0
    with pytest.raises(PreconditionError):
        PolarGrid.disk(16, 15)


def test_perp_gradient_of_x_is_unit_y(disk):
    x, _ = disk.cartesian()
    vx, vy = perp_gradient(ScalarField(disk, x)).cartesian()
    # d_theta(cos theta) carries the O(dtheta^2) error of the centred stencil
    tol = disk.dtheta ** 2 / 6 * 1.01
    assert np.max(np.abs(vx)) < tol
    assert np.max(np.abs(vy - 1)) < tol


def test_perp_gradient_rigid_rotation(disk):
    R, _ = disk.mesh()
    v = perp_gradient(ScalarField(disk, 0.5 * R ** 2))
    assert np.max(np.abs(v["r"])) == 0.0
    assert np.allclose(v["theta"][:-1], R[:-1], atol=1e-13)


def test_perp_gradient_quartic_second_order():
    errs = []
    for n in (32, 64, 128):
        g = PolarGrid.disk(n, 2 * n)
        R, _ = g.mesh()
        v = perp_gradient(ScalarField(g, (1 - R ** 2) ** 2))
        exact = -4 * R * (1 - R ** 2)
        errs.append(np.max(np.abs(v["theta"] - exact)))
        # one-sided boundary stencil error is (h^2 / 3) * max|f'''| = 8 h^2
        assert errs[-1] <= 8 * g.dr ** 2
    assert np.log2(errs[-2] / errs[-1]) > 1.9


@pytest.mark.parametrize("n", [16, 64])
def test_divergence_of_perp_gradient_vanishes(n):
    g = PolarGrid.disk(n, 2 * n)
    s = ScalarField(g, g.sample(lambda x, y: np.exp(x) * np.sin(2 * y)))
    div = divergence(perp_gradient(s)).values
    assert np.max(np.abs(div)) < 1e-10


def test_divergence_exact_for_linear_field():
    errs = []
    for n in (32, 64, 128):
        g = PolarGrid.disk(n, 2 * n)
        R, T = g.mesh()
        # v = (x, y) has divergence 2 and is smooth through the axis
        v = VectorField(g, {"r": R, "theta": np.zeros(g.shape)})
        errs.append(np.max(np.abs(divergence(v).values - 2)))
    assert max(errs) < 1e-12


def test_bracket_of_coordinates(disk):
    x, y = disk.cartesian()
    b = poisson_bracket(ScalarField(disk, x), ScalarField(disk, y))
    assert np.max(np.abs(b.values - 1)) < disk.dtheta ** 2 / 3


def test_bracket_radial_pair_vanishes(disk):
    R, _ = disk.mesh()
    b = poisson_bracket(ScalarField(disk, R ** 2), ScalarField(disk, np.cos(R)))
    assert np.max(np.abs(b.values)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_bracket_antisymmetry_bitwise(seed):
    g = PolarGrid.disk(12, 16)
    rng = np.random.default_rng(seed)
    a = ScalarField(g, rng.normal(size=g.shape))
    b = ScalarField(g, rng.normal(size=g.shape))
    assert np.array_equal(poisson_bracket(a, b).values, -poisson_bracket(b, a).values)
    assert np.all(poisson_bracket(a, a).values == 0)


def test_bracket_grid_mismatch():
    a = ScalarField(PolarGrid.disk(8, 8), np.zeros((8, 8)))
    b = ScalarField(PolarGrid.disk(8, 16), np.zeros((8, 16)))
    with pytest.raises(PreconditionError):
        poisson_bracket(a, b)


@pytest.mark.parametrize("scale", [(1.0, 1.0), (1.1, 1.0), (0.8, 1.3)])
def test_poisson_solver_inverts_laplacian(scale):
    g = PolarGrid.disk(48, 64, scale=scale)
    rhs = ScalarField(g, g.sample(lambda x, y: 1 + x * y - np.cos(y)))
    u = solve_poisson(rhs)
    assert np.max(np.abs(u.boundary_values())) == 0.0
    assert np.max(np.abs((laplacian(u) - rhs).values[:-1])) < 1e-9


def test_poisson_ellipse_quadratic_exact():
    a, b = 1.1, 1.0
    g = PolarGrid.disk(32, 64, scale=(a, b))
    u = solve_poisson(ScalarField(g, np.full(g.shape, -2.0)))
    exact = g.sample(lambda x, y: (1 - x ** 2 / a ** 2 - y ** 2 / b ** 2) / (a ** -2 + b ** -2))
    assert np.max(np.abs(u.values - exact)) < 1e-12


# ---------------------------------------------------------------- quadrature and contours

@pytest.mark.parametrize("power,exact", [(0, np.pi), (2, np.pi / 2), (4, np.pi / 3)])
def test_disk_integral_powers(power, exact):
    g = PolarGrid.disk(128, 64)
    R, _ = g.mesh()
    tol = 1e-13 if power <= 2 else 1e-7
    assert disk_integral(ScalarField(g, R ** power)) == pytest.approx(exact, abs=tol)


def test_disk_integral_fourth_order():
    errs = []
    for n in (16, 32, 64):
        g = PolarGrid.disk(n, 32)
        errs.append(abs(disk_integral(ScalarField(g, g.sample(lambda x, y: np.exp(x * x + y * y)))) - np.pi * (np.e - 1)))
    order = np.log2(errs[1] / errs[2])
    assert order > 3.5


def test_disk_integral_on_ellipse_area():
    g = PolarGrid.disk(16, 32, scale=(1.1, 0.7))
    assert disk_integral(ScalarField(g, np.ones(g.shape))) == pytest.approx(np.pi * 0.77, rel=1e-14)


@pytest.mark.parametrize("n", [64, 128, 256])
def test_level_perimeter_converges(n):
    g = PolarGrid.disk(n, n)
    R, _ = g.mesh()
    length = line_integral_level(ScalarField(g, R ** 2), 0.25)
    # inscribed polygon plus linear edge interpolation: O((2 pi / n)^2) deficit
    assert abs(length - np.pi) < np.pi * (2 * np.pi / n) ** 2 / 12


def test_contour_orientation_ccw_and_closed():
    g = PolarGrid.disk(32, 64)
    R, _ = g.mesh()
    (c,) = trace_level(ScalarField(g, R ** 2), 0.3)
    assert c.closed and c.signed_area() > 0


def test_contour_errors_name_the_level():
    g = PolarGrid.disk(32, 64)
    R, _ = g.mesh()
    with pytest.raises(ContourError, match="2"):
        line_integral_level(ScalarField(g, R ** 2), 2.0)
    two_wells = ScalarField(g, g.sample(lambda x, y: (x * x - 0.25) ** 2 + y * y))
    with pytest.raises(ContourError, match="components"):
        line_integral_level(two_wells, 0.01)
    with pytest.raises(ContourError, match="not closed"):
        line_integral_level(ScalarField(g, g.sample(lambda x, y: x)), 0.2)


def test_weight_field_interpolated_on_edges():
    g = PolarGrid.disk(128, 256)
    R, _ = g.mesh()
    val = line_integral_level(ScalarField(g, R ** 2), 0.25, weight=ScalarField(g, 1 / R))
    assert val == pytest.approx(2 * np.pi, rel=1e-3)


# ---------------------------------------------------------------- elliptic integrals

def test_elliptic_endpoints():
    assert elliptic_K(0.0) == pytest.approx(np.pi / 2, abs=1e-14)
    assert elliptic_E(0.0) == pytest.approx(np.pi / 2, abs=1e-14)
    assert elliptic_E(1.0) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("m", np.round(np.arange(0.1, 1.0, 0.1), 1))
def test_legendre_relation(m):
    lhs = elliptic_E(m) * elliptic_K(1 - m) + elliptic_E(1 - m) * elliptic_K(m) - elliptic_K(m) * elliptic_K(1 - m)
    assert lhs == pytest.approx(np.pi / 2, abs=1e-12)


def test_elliptic_against_scipy():
    m = np.linspace(0, 1 - 1e-11, 4001)
    assert np.max(np.abs(elliptic_K(m) / sp.ellipk(m) - 1)) < 1e-14
    assert np.max(np.abs(elliptic_E(m) - sp.ellipe(m))) < 1e-14


@pytest.mark.parametrize("m", [-0.1, 1.0, 1 - 1e-13, np.nan])
def test_elliptic_K_rejects(m):
    with pytest.raises(PreconditionError):
        elliptic_K(m)


# ---------------------------------------------------------------- profiles and interpolation

@pytest.mark.parametrize("profile", [
    Profile.polynomial([1, -2, 0.5]),
    Profile.from_expr("sin(a) + a**3"),
    Profile.from_knots(np.linspace(-1, 1, 33), np.tanh(np.linspace(-1, 1, 33))),
    Profile.from_callable(np.cos),
])
def test_profile_derivatives_consistent(profile):
    x = np.linspace(-0.7, 0.7, 9)
    h = 1e-5
    fd1 = (profile(x + h) - profile(x - h)) / (2 * h)
    fd2 = (profile(x + h, 1) - profile(x - h, 1)) / (2 * h)
    assert np.allclose(profile(x, 1), fd1, atol=1e-8)
    assert np.allclose(profile(x, 2), fd2, atol=2e-6)


@pytest.mark.parametrize("profile", [
    Profile.polynomial([0, 1, 3]),
    Profile.from_expr("exp(-a**2)"),
    Profile.from_knots([0, 1, 2, 3, 4], [0, 1, 4, 9, 16]),
])
def test_profile_json_roundtrip(profile):
    back = Profile.from_json(profile.to_json())
    x = np.linspace(0.1, 3.9, 17)
    assert np.allclose(back(x), profile(x), atol=1e-14)
    assert np.allclose(back(x, 2), profile(x, 2), atol=1e-12)


def test_profile_bad_expression():
    with pytest.raises(PreconditionError):
        Profile.from_expr("sin(b)")


def test_interpolator_smooth_field():
    g = PolarGrid.disk(64, 128)
    f = lambda x, y: np.sin(x) * np.cos(2 * y)  # noqa: E731
    interp = PolarInterpolator(ScalarField(g, g.sample(f)))
    rng = np.random.default_rng(0)
    r = np.sqrt(rng.uniform(0, 0.98, 200))
    t = rng.uniform(0, 2 * np.pi, 200)
    x, y = r * np.cos(t), r * np.sin(t)
    assert np.max(np.abs(interp(x, y) - f(x, y))) < 1e-5


def test_vector_field_shape_checked():
    g = PolarGrid.disk(8, 8)
    with pytest.raises(PreconditionError):
        VectorField(g, {"r": np.zeros((8, 8))})
